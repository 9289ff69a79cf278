//! Annealer energy schedules, reverse-anneal waveforms and the Γ/J conversion.
//!
//! A schedule tabulates the two machine energy scales `A(s)` (transverse) and
//! `B(s)` (longitudinal) in GHz against the anneal fraction `s ∈ [0, 1]`.
//! Values between knots are linearly interpolated. A waveform is the
//! piecewise-linear `s(t)` of a symmetric reverse anneal: ramp from `s = 1`
//! down to the pause value, hold, ramp back up.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One knot of a schedule table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePoint<T> {
    pub s: T,
    pub a_ghz: T,
    pub b_ghz: T,
}

/// Tabulated `A(s)`, `B(s)` curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTable<T> {
    name: String,
    synthetic: bool,
    points: Vec<SchedulePoint<T>>,
}

/// CSV header expected by [`load_schedule`].
pub const SCHEDULE_HEADER: [&str; 3] = ["s", "A_GHz", "B_GHz"];

/// Number of knots in the built-in synthetic schedule.
pub const SYNTHETIC_KNOTS: usize = 1001;

impl<T: Scalar> ScheduleTable<T> {
    /// Builds a validated table from knots already in ascending `s` order.
    pub fn new(name: impl Into<String>, points: Vec<SchedulePoint<T>>) -> Result<Self> {
        let rows: Vec<usize> = (1..=points.len()).collect();
        validate(&points, &rows)?;
        Ok(ScheduleTable {
            name: name.into(),
            synthetic: false,
            points,
        })
    }

    /// The built-in schedule `A(s) = 6 (1 − s)²`, `B(s) = 10 s²` on 1001
    /// uniform knots. It is a qualitative stand-in for vendor curves and is
    /// labelled synthetic everywhere it is reported.
    pub fn synthetic() -> Self {
        let six = T::lit(6.0);
        let ten = T::lit(10.0);
        let last = T::count(SYNTHETIC_KNOTS - 1);
        let points = (0..SYNTHETIC_KNOTS)
            .map(|i| {
                let s = T::count(i) / last;
                let u = T::one() - s;
                SchedulePoint {
                    s,
                    a_ghz: six * u * u,
                    b_ghz: ten * s * s,
                }
            })
            .collect();
        ScheduleTable {
            name: "synthetic-quadratic".to_string(),
            synthetic: true,
            points,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_synthetic(&self) -> bool {
        self.synthetic
    }

    /// Name with a `(synthetic)` marker when applicable; used in reports.
    pub fn label(&self) -> String {
        if self.synthetic {
            format!("{} (synthetic)", self.name)
        } else {
            self.name.clone()
        }
    }

    pub fn points(&self) -> &[SchedulePoint<T>] {
        &self.points
    }

    /// Linear interpolation of `(A(s), B(s))`; exact at every knot.
    pub fn interpolate(&self, s: T) -> Result<(T, T)> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(Error::OutOfRange {
                what: "anneal fraction s",
                value: s.as_f64(),
                lo: 0.0,
                hi: 1.0,
            });
        }
        let pts = &self.points;
        // first knot with knot.s > s
        let hi = pts.partition_point(|p| p.s <= s);
        if hi == 0 {
            return Ok((pts[0].a_ghz, pts[0].b_ghz));
        }
        let lo = &pts[hi - 1];
        if lo.s == s || hi == pts.len() {
            return Ok((lo.a_ghz, lo.b_ghz));
        }
        let up = &pts[hi];
        let w = (s - lo.s) / (up.s - lo.s);
        Ok((
            lo.a_ghz + w * (up.a_ghz - lo.a_ghz),
            lo.b_ghz + w * (up.b_ghz - lo.b_ghz),
        ))
    }

    /// Energies at `s` for a programmed coupling `j_programmed ∈ (0, 1]`.
    pub fn energy_point(&self, s: T, j_programmed: T) -> Result<EnergyPoint<T>> {
        if !(j_programmed > T::zero() && j_programmed <= T::one()) {
            return Err(Error::OutOfRange {
                what: "programmed coupling J",
                value: j_programmed.as_f64(),
                lo: 0.0,
                hi: 1.0,
            });
        }
        let (a, b) = self.interpolate(s)?;
        Ok(EnergyPoint::from_energies(a, b, j_programmed))
    }
}

/// Parses a `s,A_GHz,B_GHz` CSV into a validated table. Rows are sorted by
/// `s` before validation; a repeated `s` is reported as non-monotone.
pub fn load_schedule<T: Scalar>(source: &str, name: &str) -> Result<ScheduleTable<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source.as_bytes());
    let headers = reader.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != SCHEDULE_HEADER {
        return Err(Error::ScheduleRow {
            row: 1,
            msg: format!(
                "expected header `s,A_GHz,B_GHz`, found `{}`",
                names.join(",")
            ),
        });
    }
    let mut rows: Vec<(usize, SchedulePoint<T>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 3 {
            return Err(Error::ScheduleRow {
                row,
                msg: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let mut vals = [T::zero(); 3];
        for (slot, field) in vals.iter_mut().zip(record.iter()) {
            let v: f64 = field.parse().map_err(|_| Error::ScheduleRow {
                row,
                msg: format!("malformed number `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::ScheduleRow {
                    row,
                    msg: format!("non-finite value `{field}`"),
                });
            }
            *slot = T::lit(v);
        }
        rows.push((
            row,
            SchedulePoint {
                s: vals[0],
                a_ghz: vals[1],
                b_ghz: vals[2],
            },
        ));
    }
    rows.sort_by(|a, b| a.1.s.partial_cmp(&b.1.s).expect("finite"));
    let (line_numbers, points): (Vec<usize>, Vec<SchedulePoint<T>>) = rows.into_iter().unzip();
    validate(&points, &line_numbers)?;
    Ok(ScheduleTable {
        name: name.to_string(),
        synthetic: false,
        points,
    })
}

fn validate<T: Scalar>(points: &[SchedulePoint<T>], rows: &[usize]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::Schedule(format!(
            "need at least 2 knots, found {}",
            points.len()
        )));
    }
    let first = points[0];
    let last = points[points.len() - 1];
    if first.s != T::zero() {
        return Err(Error::ScheduleRow {
            row: rows[0],
            msg: format!("first knot must be at s = 0, found {}", first.s),
        });
    }
    if last.s != T::one() {
        return Err(Error::ScheduleRow {
            row: rows[points.len() - 1],
            msg: format!("last knot must be at s = 1, found {}", last.s),
        });
    }
    for (i, p) in points.iter().enumerate() {
        let row = rows[i];
        if p.a_ghz < T::zero() || p.b_ghz < T::zero() {
            return Err(Error::ScheduleRow {
                row,
                msg: "negative energy".to_string(),
            });
        }
        if i == 0 {
            continue;
        }
        let prev = points[i - 1];
        if p.s <= prev.s {
            return Err(Error::ScheduleRow {
                row,
                msg: format!("non-monotone s ({} after {})", p.s, prev.s),
            });
        }
        if p.a_ghz > prev.a_ghz {
            return Err(Error::ScheduleRow {
                row,
                msg: "A(s) must be non-increasing in s".to_string(),
            });
        }
        if p.b_ghz < prev.b_ghz {
            return Err(Error::ScheduleRow {
                row,
                msg: "B(s) must be non-decreasing in s".to_string(),
            });
        }
    }
    Ok(())
}

/// Γ/J, with an explicit sentinel where the coupling energy vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRatio<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> GammaRatio<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            GammaRatio::Finite(v) => Some(v),
            GammaRatio::Infinite => None,
        }
    }

    /// Plain float view; the sentinel maps to `+∞`.
    pub fn to_float(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }

    pub fn from_float(v: T) -> Self {
        if v.is_infinite() {
            GammaRatio::Infinite
        } else {
            GammaRatio::Finite(v)
        }
    }
}

impl<T: Scalar> fmt::Display for GammaRatio<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaRatio::Finite(v) => write!(f, "{v:?}"),
            GammaRatio::Infinite => f.write_str("inf"),
        }
    }
}

/// Finite ratios serialise as numbers, the sentinel as the string `"inf"`.
impl<T: Scalar> Serialize for GammaRatio<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GammaRatio::Finite(v) => serializer.serialize_f64(v.as_f64()),
            GammaRatio::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for GammaRatio<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) if v.is_finite() => Ok(GammaRatio::Finite(T::lit(v))),
            Repr::Text(t) if t == "inf" => Ok(GammaRatio::Infinite),
            Repr::Number(v) => Err(serde::de::Error::custom(format!("non-finite ratio {v}"))),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got `{t}`"))),
        }
    }
}

impl<T: Scalar> std::str::FromStr for GammaRatio<T> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "inf" {
            return Ok(GammaRatio::Infinite);
        }
        let v: f64 = text
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("malformed ratio `{text}`")))?;
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("malformed ratio `{text}`")));
        }
        Ok(GammaRatio::Finite(T::lit(v)))
    }
}

/// Transverse energy Γ = A/2, coupling energy B·J/2 and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPoint<T> {
    pub gamma_ghz: T,
    pub j_ghz: T,
    pub gamma_over_j: GammaRatio<T>,
}

impl<T: Scalar> EnergyPoint<T> {
    pub fn from_energies(a_ghz: T, b_ghz: T, j_programmed: T) -> Self {
        let two = T::lit(2.0);
        let bj = b_ghz * j_programmed;
        let gamma_over_j = if bj > T::zero() {
            GammaRatio::Finite(a_ghz / bj)
        } else {
            GammaRatio::Infinite
        };
        EnergyPoint {
            gamma_ghz: a_ghz / two,
            j_ghz: bj / two,
            gamma_over_j,
        }
    }
}

/// Piecewise-linear `s(t)` of a symmetric reverse anneal. Times are in µs.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    breakpoints: Vec<(T, T)>,
    s_pause: T,
    ramp_us: T,
    hold_us: T,
}

/// Builds `(0, 1), (ramp, s_p), (ramp + hold, s_p), (2 ramp + hold, 1)`.
/// With a zero hold the two middle breakpoints share a time.
pub fn build_reverse_waveform<T: Scalar>(
    s_pause: T,
    ramp_us: T,
    hold_us: T,
) -> Result<Waveform<T>> {
    if !(s_pause >= T::zero() && s_pause <= T::one()) {
        return Err(Error::OutOfRange {
            what: "pause fraction",
            value: s_pause.as_f64(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !(ramp_us > T::zero()) || !ramp_us.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ramp duration must be positive, got {ramp_us}"
        )));
    }
    if !(hold_us >= T::zero()) || !hold_us.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "hold duration must be non-negative, got {hold_us}"
        )));
    }
    let one = T::one();
    let t1 = ramp_us;
    let t2 = ramp_us + hold_us;
    let t3 = ramp_us + hold_us + ramp_us;
    Ok(Waveform {
        breakpoints: vec![(T::zero(), one), (t1, s_pause), (t2, s_pause), (t3, one)],
        s_pause,
        ramp_us,
        hold_us,
    })
}

impl<T: Scalar> Waveform<T> {
    pub fn breakpoints(&self) -> &[(T, T)] {
        &self.breakpoints
    }

    pub fn s_pause(&self) -> T {
        self.s_pause
    }

    pub fn ramp_us(&self) -> T {
        self.ramp_us
    }

    /// Exposure time τ.
    pub fn hold_us(&self) -> T {
        self.hold_us
    }

    pub fn total_us(&self) -> T {
        self.breakpoints[self.breakpoints.len() - 1].0
    }

    /// Distinct breakpoint times (a zero hold collapses two of them).
    pub fn distinct_times(&self) -> Vec<T> {
        let mut out: Vec<T> = Vec::with_capacity(self.breakpoints.len());
        for &(t, _) in &self.breakpoints {
            if out.last() != Some(&t) {
                out.push(t);
            }
        }
        out
    }

    /// Evaluates `s(t)` for `0 ≤ t ≤ total`.
    pub fn s_at(&self, t: T) -> Result<T> {
        let total = self.total_us();
        if !(t >= T::zero() && t <= total) {
            return Err(Error::OutOfRange {
                what: "waveform time (µs)",
                value: t.as_f64(),
                lo: 0.0,
                hi: total.as_f64(),
            });
        }
        Ok(self.eval(t))
    }

    fn eval(&self, t: T) -> T {
        let bp = &self.breakpoints;
        // second half mirrors the first
        let total = self.total_us();
        let t = if t > total - t { total - t } else { t };
        let (t0, s0) = bp[0];
        let (t1, s1) = bp[1];
        if t >= t1 {
            return s1;
        }
        s0 + (s1 - s0) * ((t - t0) / (t1 - t0))
    }

    /// `[[t_us, s], ...]` for logs and archive headers.
    pub fn to_json(&self) -> String {
        let parts: Vec<String> = self
            .breakpoints
            .iter()
            .map(|(t, s)| format!("[{},{}]", t.as_f64(), s.as_f64()))
            .collect();
        format!("[{}]", parts.join(","))
    }
}
