//! Finitely supported probability measures on R^d.
//!
//! A [`DiscreteMeasure`] stores its atoms in canonical form: sorted
//! lexicographically by coordinates, exact duplicates merged, all masses
//! strictly positive and summing to one within `MASS_TOL`. Values are
//! immutable after construction, so they can be shared freely across
//! threads.

use serde::Deserialize;
use thiserror::Error;

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;

/// Default cap on the number of pairwise atom products a convolution may
/// form. Exceeding it is an error, never a silent approximation.
pub const DEFAULT_ATOM_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("empty input: a measure needs at least one atom")]
    EmptyInput,
    #[error("non-finite coordinate encountered")]
    NonFiniteCoordinate,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("atom mass must be strictly positive and finite, got {mass}")]
    InvalidMass { mass: f64 },
    #[error("masses sum to {sum}, more than {MASS_TOL} away from 1")]
    MassSumInvalid { sum: f64 },
    #[error("mixture weight {t} outside [0, 1]")]
    MixtureWeightOutOfRange { t: f64 },
    #[error("convolution needs {required} atom products, cap is {cap}")]
    AtomCapExceeded { required: u128, cap: usize },
    #[error("operation requires dimension 1, measure has dimension {dim}")]
    NotUnivariate { dim: usize },
    #[error("quantile level {q} outside (0, 1]")]
    QuantileLevelOutOfRange { q: f64 },
    #[error("gauge exponent {p} must be finite and >= 0")]
    InvalidGaugeExponent { p: f64 },
    #[error("malformed measure JSON: {0}")]
    Json(String),
}

/// Compensated (Neumaier) summation; keeps mass checks meaningful even for
/// measures with 10^5 atoms.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A point of the sample space R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, MeasureError> {
        if coords.is_empty() {
            return Err(MeasureError::EmptyInput);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(MeasureError::NonFiniteCoordinate);
        }
        Ok(Point { coords })
    }

    pub fn scalar(x: f64) -> Result<Self, MeasureError> {
        Point::new(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Euclidean distance between two coordinate slices.
#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite coordinates") {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// Finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    /// Row-major atom coordinates, `atom_count * dim` entries, sorted
    /// lexicographically with exact duplicates merged.
    coords: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from `(point, mass)` pairs, canonicalizing the atom
    /// order and merging exact duplicates.
    pub fn new(atoms: Vec<(Point, f64)>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::EmptyInput);
        }
        let dim = atoms[0].0.dim();
        let mut flat: Vec<(Vec<f64>, f64)> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            if p.dim() != dim {
                return Err(MeasureError::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if !(m.is_finite() && m > 0.0) {
                return Err(MeasureError::InvalidMass { mass: m });
            }
            flat.push((p.coords, m));
        }
        Self::from_raw(dim, flat)
    }

    fn from_raw(dim: usize, mut atoms: Vec<(Vec<f64>, f64)>) -> Result<Self, MeasureError> {
        atoms.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        let mut coords = Vec::with_capacity(atoms.len() * dim);
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (c, m) in atoms {
            let merged = match masses.last_mut() {
                Some(last) if coords[coords.len() - dim..] == c[..] => {
                    *last += m;
                    true
                }
                _ => false,
            };
            if !merged {
                coords.extend_from_slice(&c);
                masses.push(m);
            }
        }
        let measure = DiscreteMeasure {
            dim,
            coords,
            masses,
        };
        measure.check_total_mass()?;
        Ok(measure)
    }

    fn check_total_mass(&self) -> Result<(), MeasureError> {
        let sum = kahan_sum(self.masses.iter().copied());
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::MassSumInvalid { sum });
        }
        Ok(())
    }

    /// Empirical measure of a sample: mass `multiplicity / n` at each
    /// distinct value, with the multiplicities counted exactly.
    pub fn empirical(points: &[Point]) -> Result<Self, MeasureError> {
        if points.is_empty() {
            return Err(MeasureError::EmptyInput);
        }
        let dim = points[0].dim();
        let mut sorted: Vec<&[f64]> = Vec::with_capacity(points.len());
        for p in points {
            if p.dim() != dim {
                return Err(MeasureError::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            sorted.push(p.coords());
        }
        sorted.sort_by(|a, b| lex_cmp(a, b));
        let n = points.len() as f64;
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut counts: Vec<u64> = Vec::new();
        for c in sorted {
            match counts.last_mut() {
                Some(k) if coords[coords.len() - dim..] == c[..] => *k += 1,
                _ => {
                    coords.extend_from_slice(c);
                    counts.push(1);
                }
            }
        }
        let measure = DiscreteMeasure {
            dim,
            coords,
            masses: counts.into_iter().map(|k| k as f64 / n).collect(),
        };
        measure.check_total_mass()?;
        Ok(measure)
    }

    /// Empirical measure of a univariate sample.
    pub fn empirical_scalar(xs: &[f64]) -> Result<Self, MeasureError> {
        if xs.is_empty() {
            return Err(MeasureError::EmptyInput);
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(MeasureError::NonFiniteCoordinate);
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let mut coords = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for x in sorted {
            match (coords.last(), counts.last_mut()) {
                (Some(&last), Some(k)) if last == x => *k += 1,
                _ => {
                    coords.push(x);
                    counts.push(1);
                }
            }
        }
        let measure = DiscreteMeasure {
            dim: 1,
            coords,
            masses: counts.into_iter().map(|k| k as f64 / n).collect(),
        };
        measure.check_total_mass()?;
        Ok(measure)
    }

    /// Unit mass at a single point.
    pub fn dirac(point: Point) -> Self {
        DiscreteMeasure {
            dim: point.dim(),
            coords: point.coords,
            masses: vec![1.0],
        }
    }

    /// Unit mass at a real number.
    pub fn dirac_scalar(x: f64) -> Result<Self, MeasureError> {
        Ok(Self::dirac(Point::scalar(x)?))
    }

    /// Convex combination `(1-t) mu1 + t mu2`; atoms with zero resulting
    /// weight are dropped.
    pub fn mix(mu1: &Self, mu2: &Self, t: f64) -> Result<Self, MeasureError> {
        if !(t.is_finite() && (0.0..=1.0).contains(&t)) {
            return Err(MeasureError::MixtureWeightOutOfRange { t });
        }
        if mu1.dim != mu2.dim {
            return Err(MeasureError::DimensionMismatch {
                expected: mu1.dim,
                got: mu2.dim,
            });
        }
        let mut atoms = Vec::with_capacity(mu1.atom_count() + mu2.atom_count());
        for (c, m) in mu1.iter_atoms() {
            let w = (1.0 - t) * m;
            if w > 0.0 {
                atoms.push((c.to_vec(), w));
            }
        }
        for (c, m) in mu2.iter_atoms() {
            let w = t * m;
            if w > 0.0 {
                atoms.push((c.to_vec(), w));
            }
        }
        Self::from_raw(mu1.dim, atoms)
    }

    /// Convolution of two univariate measures: atoms are pairwise sums,
    /// masses are products, exact duplicates merged.
    pub fn convolve(mu1: &Self, mu2: &Self, atom_cap: usize) -> Result<Self, MeasureError> {
        if mu1.dim != 1 {
            return Err(MeasureError::NotUnivariate { dim: mu1.dim });
        }
        if mu2.dim != 1 {
            return Err(MeasureError::NotUnivariate { dim: mu2.dim });
        }
        let required = mu1.atom_count() as u128 * mu2.atom_count() as u128;
        if required > atom_cap as u128 {
            return Err(MeasureError::AtomCapExceeded {
                required,
                cap: atom_cap,
            });
        }
        // Order so the inner shift list is the smaller support.
        let (big, small) = if mu1.atom_count() >= mu2.atom_count() {
            (mu1, mu2)
        } else {
            (mu2, mu1)
        };
        let (coords, masses) =
            convolve_sorted(&big.coords, &big.masses, &small.coords, &small.masses);
        let out = DiscreteMeasure {
            dim: 1,
            coords,
            masses,
        };
        out.check_total_mass()?;
        Ok(out)
    }

    /// n-fold convolution power; `n = 1` returns a clone.
    pub fn convolve_power(&self, n: usize, atom_cap: usize) -> Result<Self, MeasureError> {
        assert!(n >= 1, "convolution power needs n >= 1");
        let mut acc = self.clone();
        for _ in 1..n {
            acc = Self::convolve(&acc, self, atom_cap)?;
        }
        Ok(acc)
    }

    /// Distribution function `F(x)`: total mass of atoms `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        assert_eq!(self.dim, 1, "cdf requires dimension 1");
        let k = self.coords.partition_point(|&v| v <= x);
        kahan_sum(self.masses[..k].iter().copied())
    }

    /// Lower quantile `inf{x : F(x) >= q}` for `q` in `(0, 1]`.
    pub fn quantile(&self, q: f64) -> Result<f64, MeasureError> {
        assert_eq!(self.dim, 1, "quantile requires dimension 1");
        if !(q.is_finite() && q > 0.0 && q <= 1.0) {
            return Err(MeasureError::QuantileLevelOutOfRange { q });
        }
        let mut cum = 0.0;
        for (i, &m) in self.masses.iter().enumerate() {
            cum += m;
            if cum >= q {
                return Ok(self.coords[i]);
            }
        }
        // Rounding left cum slightly below q <= 1; the top atom is the answer.
        Ok(*self.coords.last().expect("nonempty measure"))
    }

    /// Integral of the gauge: sum of `mass * psi(atom)`.
    pub fn gauge_integral(&self, psi: &GaugeFunction) -> f64 {
        kahan_sum(self.iter_atoms().map(|(c, m)| m * psi.eval(c)))
    }

    /// Gauge tail: sum of `mass * psi(atom)` over atoms with `psi(atom) >= a`.
    pub fn gauge_tail(&self, psi: &GaugeFunction, a: f64) -> f64 {
        kahan_sum(self.iter_atoms().filter_map(|(c, m)| {
            let v = psi.eval(c);
            (v >= a).then_some(m * v)
        }))
    }

    /// Rounds every coordinate to the nearest multiple of `grid_width` and
    /// re-merges; `grid_width = 0` disables the rounding.
    pub fn coarsen(&self, grid_width: f64) -> Result<Self, MeasureError> {
        assert!(grid_width >= 0.0 && grid_width.is_finite());
        if grid_width == 0.0 {
            return Ok(self.clone());
        }
        let atoms = self
            .iter_atoms()
            .map(|(c, m)| {
                (
                    c.iter()
                        .map(|x| (x / grid_width).round() * grid_width)
                        .collect(),
                    m,
                )
            })
            .collect();
        Self::from_raw(self.dim, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom_count(&self) -> usize {
        self.masses.len()
    }

    /// Coordinates of atom `i`.
    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Atom values of a univariate measure, ascending.
    pub fn values(&self) -> &[f64] {
        assert_eq!(self.dim, 1, "values() requires dimension 1");
        &self.coords
    }

    pub fn iter_atoms(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.coords
            .chunks_exact(self.dim.max(1))
            .zip(self.masses.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.masses.iter().copied())
    }

    /// Serializes as `{"dim": d, "atoms": [[..], ..], "masses": [..]}` with
    /// masses printed to 17 significant digits.
    pub fn to_json_string(&self) -> String {
        let mut s = String::with_capacity(32 + self.atom_count() * 28 * (self.dim + 1));
        s.push_str(&format!("{{\"dim\": {}, \"atoms\": [", self.dim));
        for i in 0..self.atom_count() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push('[');
            for (k, c) in self.atom(i).iter().enumerate() {
                if k > 0 {
                    s.push_str(", ");
                }
                s.push_str(&format!("{c:.16e}"));
            }
            s.push(']');
        }
        s.push_str("], \"masses\": [");
        for (i, m) in self.masses.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(&format!("{m:.16e}"));
        }
        s.push_str("]}");
        s
    }

    pub fn from_json_str(json: &str) -> Result<Self, MeasureError> {
        serde_json::from_str(json).map_err(|e| MeasureError::Json(e.to_string()))
    }
}

impl serde::Serialize for DiscreteMeasure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("DiscreteMeasure", 3)?;
        s.serialize_field("dim", &self.dim)?;
        let atoms: Vec<&[f64]> = (0..self.atom_count()).map(|i| self.atom(i)).collect();
        s.serialize_field("atoms", &atoms)?;
        s.serialize_field("masses", &self.masses)?;
        s.end()
    }
}

impl<'de> serde::Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            dim: usize,
            atoms: Vec<Vec<f64>>,
            masses: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.atoms.len() != raw.masses.len() {
            return Err(serde::de::Error::custom("atoms and masses length mismatch"));
        }
        let mut atoms = Vec::with_capacity(raw.atoms.len());
        for (c, m) in raw.atoms.into_iter().zip(raw.masses) {
            if c.len() != raw.dim {
                return Err(serde::de::Error::custom("atom dimension mismatch"));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(serde::de::Error::custom("non-finite coordinate"));
            }
            if !(m.is_finite() && m > 0.0) {
                return Err(serde::de::Error::custom("invalid atom mass"));
            }
            atoms.push((c, m));
        }
        if atoms.is_empty() {
            return Err(serde::de::Error::custom("measure needs at least one atom"));
        }
        DiscreteMeasure::from_raw(raw.dim, atoms).map_err(serde::de::Error::custom)
    }
}

/// Mid-point discretization of the uniform distribution on `[a, b]`:
/// `n_points` equally weighted atoms at `a + (k + 1/2) (b - a) / n_points`.
pub fn uniform_grid_measure(
    a: f64,
    b: f64,
    n_points: usize,
) -> Result<DiscreteMeasure, MeasureError> {
    if n_points == 0 {
        return Err(MeasureError::EmptyInput);
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(MeasureError::NonFiniteCoordinate);
    }
    let w = 1.0 / n_points as f64;
    let step = (b - a) / n_points as f64;
    let coords: Vec<f64> = (0..n_points).map(|k| a + (k as f64 + 0.5) * step).collect();
    let measure = DiscreteMeasure {
        dim: 1,
        coords,
        masses: vec![w; n_points],
    };
    measure.check_total_mass()?;
    Ok(measure)
}

/// Merges the pairwise-sum multiset of two sorted univariate supports.
///
/// The `small` support acts as a set of shifts; the `big` support is scanned
/// once per shift through a pointer front, producing sorted, exactly-merged
/// output without materializing and sorting all pairs.
fn convolve_sorted(
    big: &[f64],
    big_mass: &[f64],
    small: &[f64],
    small_mass: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let k = small.len();
    let mut idx = vec![0usize; k];
    let mut out_v: Vec<f64> = Vec::with_capacity(big.len() + small.len());
    let mut out_m: Vec<f64> = Vec::new();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..k {
            if idx[j] < big.len() {
                let v = big[idx[j]] + small[j];
                match best {
                    Some((bv, _)) if bv <= v => {}
                    _ => best = Some((v, j)),
                }
            }
        }
        let Some((v, j)) = best else { break };
        let m = big_mass[idx[j]] * small_mass[j];
        idx[j] += 1;
        match (out_v.last(), out_m.last_mut()) {
            (Some(&last), Some(lm)) if last == v => *lm += m,
            _ => {
                out_v.push(v);
                out_m.push(m);
            }
        }
    }
    (out_v, out_m)
}

/// Continuous gauge `psi_p(x) = (1 + |x|_2)^p` with `p >= 0`; `psi_0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeFunction {
    p: f64,
}

impl GaugeFunction {
    pub fn psi(p: f64) -> Result<Self, MeasureError> {
        if !(p.is_finite() && p >= 0.0) {
            return Err(MeasureError::InvalidGaugeExponent { p });
        }
        Ok(GaugeFunction { p })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn eval(&self, coords: &[f64]) -> f64 {
        if self.p == 0.0 {
            return 1.0;
        }
        let norm = if coords.len() == 1 {
            coords[0].abs()
        } else {
            coords.iter().map(|c| c * c).sum::<f64>().sqrt()
        };
        (1.0 + norm).powf(self.p)
    }

    pub fn eval_scalar(&self, x: f64) -> f64 {
        self.eval(std::slice::from_ref(&x))
    }
}
