//! Instance data: support boxes, samples, first-stage space, recourse matrices
//! and affine policies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on explicit vertex enumeration (2^16 vertices).
pub const DEFAULT_VERTEX_CAP: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field}: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("box coordinate {coord}: lower {lower} exceeds upper {upper}")]
    EmptyBox { coord: usize, lower: f64, upper: f64 },
    #[error("sample {sample} lies outside the support at coordinate {coord} (value {value})")]
    SampleOutside { sample: usize, coord: usize, value: f64 },
    #[error("box has {nondegenerate} free coordinates; enumerating 2^{nondegenerate} vertices exceeds the cap of {cap}")]
    VertexCap { nondegenerate: usize, cap: usize },
    #[error("{0}")]
    Invalid(String),
}

fn check_len(field: &str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::Dimension {
            field: field.to_string(),
            expected,
            found,
        })
    }
}

/// Dense row-major matrix. Serialized as nested arrays, one per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from rows. An empty row list needs an explicit width.
    pub fn from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Result<Self, ModelError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            check_len(&format!("matrix row {i}"), cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Mᵀ y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            if y[i] != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += y[i] * a;
                }
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        Matrix::from_rows(rows, cols).map_err(serde::de::Error::custom)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for BoxSet {
    type Error = ModelError;
    fn try_from(r: RawBox) -> Result<Self, ModelError> {
        BoxSet::new(r.lower, r.upper)
    }
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ModelError> {
        check_len("box upper", lower.len(), upper.len())?;
        for (j, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l <= u) || !l.is_finite() || !u.is_finite() {
                return Err(ModelError::EmptyBox {
                    coord: j,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_degenerate(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    /// Coordinates with `lower < upper`.
    pub fn free_coords(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| !self.is_degenerate(j)).collect()
    }

    pub fn effective_dim(&self) -> usize {
        (0..self.dim()).filter(|&j| !self.is_degenerate(j)).count()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    pub fn all_lower(&self) -> Vec<f64> {
        self.lower.clone()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    /// 1-norm diameter, the largest possible transport distance inside the box.
    pub fn l1_diameter(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).sum()
    }

    /// Vertex obtained by picking `upper` on the coordinates flagged in `pick_upper`.
    pub fn vertex_from_bits(&self, pick_upper: impl Fn(usize) -> bool) -> Vec<f64> {
        (0..self.dim())
            .map(|j| if pick_upper(j) { self.upper[j] } else { self.lower[j] })
            .collect()
    }

    /// Enumerates all `2^k` vertices (k = free coordinates). Fails beyond `cap`.
    pub fn vertices(&self, cap: usize) -> Result<BoxVertices<'_>, ModelError> {
        let free = self.free_coords();
        let k = free.len();
        if k >= usize::BITS as usize - 1 || (1usize << k) > cap {
            return Err(ModelError::VertexCap { nondegenerate: k, cap });
        }
        Ok(BoxVertices {
            bx: self,
            free,
            next: 0,
            count: 1usize << k,
        })
    }

    /// `self ∩ other`.
    pub fn intersect(&self, other: &BoxSet) -> Result<BoxSet, ModelError> {
        check_len("box dimension", self.dim(), other.dim())?;
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        BoxSet::new(lower, upper)
    }

    pub fn is_subset_of(&self, other: &BoxSet, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|j| self.lower[j] >= other.lower[j] - tol && self.upper[j] <= other.upper[j] + tol)
    }
}

/// Iterator over box vertices in binary counting order of the free coordinates
/// (bit `b` of the counter set means the `b`-th free coordinate is at its upper bound).
pub struct BoxVertices<'a> {
    bx: &'a BoxSet,
    free: Vec<usize>,
    next: usize,
    count: usize,
}

impl Iterator for BoxVertices<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next >= self.count {
            return None;
        }
        let mut v = self.bx.lower.clone();
        for (b, &j) in self.free.iter().enumerate() {
            if self.next >> b & 1 == 1 {
                v[j] = self.bx.upper[j];
            }
        }
        self.next += 1;
        Some(v)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.count - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for BoxVertices<'_> {}

/// Historical samples `ξ₁ … ξ_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
}

impl SampleSet {
    /// Validates that every point lies in `support`.
    pub fn new(points: Vec<Vec<f64>>, support: &BoxSet) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::Invalid("at least one sample is required".into()));
        }
        for (i, p) in points.iter().enumerate() {
            check_len(&format!("sample {i}"), support.dim(), p.len())?;
            for (j, &v) in p.iter().enumerate() {
                if !(v >= support.lower[j] && v <= support.upper[j]) {
                    return Err(ModelError::SampleOutside {
                        sample: i,
                        coord: j,
                        value: v,
                    });
                }
            }
        }
        Ok(SampleSet { points })
    }

    /// Like [`SampleSet::new`] but projects out-of-support values onto the box.
    pub fn new_clamped(mut points: Vec<Vec<f64>>, support: &BoxSet) -> Result<Self, ModelError> {
        for p in points.iter_mut() {
            if p.len() == support.dim() {
                for (j, v) in p.iter_mut().enumerate() {
                    *v = v.clamp(support.lower[j], support.upper[j]);
                }
            }
        }
        SampleSet::new(points, support)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn mean(&self) -> Vec<f64> {
        sample_mean(&self.points)
    }

    /// Entrywise min / max of the samples, `[ξˡ, ξᵘ]`.
    pub fn bounding_box(&self) -> BoxSet {
        let m = self.dim();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for p in &self.points {
            for j in 0..m {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        BoxSet { lower: lo, upper: hi }
    }

    /// Samples selected by index, in the given order.
    pub fn subset(&self, idx: &[usize]) -> SampleSet {
        SampleSet {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }
}

/// Entrywise arithmetic mean of a nonempty point list.
pub fn sample_mean(points: &[Vec<f64>]) -> Vec<f64> {
    let m = points[0].len();
    let mut s = vec![0.0; m];
    for p in points {
        for (a, v) in s.iter_mut().zip(p) {
            *a += v;
        }
    }
    let n = points.len() as f64;
    s.iter_mut().for_each(|v| *v /= n);
    s
}

/// `X₁`: binaries first, then continuous columns, restricted by `G x₁ ≤ g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstStageSpace {
    pub n_binary: usize,
    pub n_continuous: usize,
    pub g: Matrix,
    pub rhs: Vec<f64>,
}

impl FirstStageSpace {
    pub fn dim(&self) -> usize {
        self.n_binary + self.n_continuous
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_binary == 0 {
            return Err(ModelError::Invalid("first stage needs at least one binary column".into()));
        }
        if self.g.nrows() > 0 {
            check_len("first_stage.g columns", self.dim(), self.g.ncols())?;
        }
        check_len("first_stage.rhs", self.g.nrows(), self.rhs.len())
    }

    pub fn max_violation(&self, x1: &[f64]) -> f64 {
        (0..self.g.nrows())
            .map(|r| dot(self.g.row(r), x1) - self.rhs[r])
            .fold(0.0, f64::max)
    }
}

/// Recourse constraints `A₁x₁ + A₂x₂ + A₃ξ ≤ b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecourseData {
    pub a1: Matrix,
    pub a2: Matrix,
    pub a3: Matrix,
    pub b: Vec<f64>,
}

impl RecourseData {
    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// Right-hand side of the recourse rows at `(x₁, ξ)`: `b − A₁x₁ − A₃ξ`.
    pub fn residual_rhs(&self, x1: &[f64], xi: &[f64]) -> Vec<f64> {
        (0..self.num_rows())
            .map(|l| self.b[l] - dot(self.a1.row(l), x1) - dot(self.a3.row(l), xi))
            .collect()
    }

    /// Scales each row so that its largest coefficient over `[A₁ | A₂ | A₃]` is 1
    /// in magnitude. Returns the applied factors.
    pub fn normalize_rows(&mut self) -> Vec<f64> {
        let mut factors = Vec::with_capacity(self.num_rows());
        for l in 0..self.num_rows() {
            let amax = self
                .a1
                .row(l)
                .iter()
                .chain(self.a2.row(l))
                .chain(self.a3.row(l))
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            let s = if amax > 0.0 { 1.0 / amax } else { 1.0 };
            for m in [&mut self.a1, &mut self.a2, &mut self.a3] {
                m.row_mut(l).iter_mut().for_each(|v| *v *= s);
            }
            self.b[l] *= s;
            factors.push(s);
        }
        factors
    }
}

/// A full two-stage DRO instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub first_stage: FirstStageSpace,
    pub recourse: RecourseData,
    pub support: BoxSet,
    pub samples: SampleSet,
    pub epsilon: f64,
}

impl Instance {
    pub fn n1(&self) -> usize {
        self.first_stage.dim()
    }

    pub fn n2(&self) -> usize {
        self.c2.len()
    }

    pub fn m(&self) -> usize {
        self.support.dim()
    }

    pub fn num_rows(&self) -> usize {
        self.recourse.num_rows()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.first_stage.validate()?;
        let (n1, n2, m, l) = (self.n1(), self.n2(), self.m(), self.num_rows());
        check_len("c1", n1, self.c1.len())?;
        check_len("recourse.a1 rows", l, self.recourse.a1.nrows())?;
        check_len("recourse.a2 rows", l, self.recourse.a2.nrows())?;
        check_len("recourse.a3 rows", l, self.recourse.a3.nrows())?;
        if l > 0 {
            check_len("recourse.a1 columns", n1, self.recourse.a1.ncols())?;
            check_len("recourse.a2 columns", n2, self.recourse.a2.ncols())?;
            check_len("recourse.a3 columns", m, self.recourse.a3.ncols())?;
        }
        for (i, p) in self.samples.points().iter().enumerate() {
            check_len(&format!("sample {i}"), m, p.len())?;
            for (j, &v) in p.iter().enumerate() {
                if !(v >= self.support.lower[j] && v <= self.support.upper[j]) {
                    return Err(ModelError::SampleOutside {
                        sample: i,
                        coord: j,
                        value: v,
                    });
                }
            }
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(ModelError::Invalid(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.c1) || !finite(&self.c2) || !finite(&self.recourse.b) {
            return Err(ModelError::Invalid("costs and right-hand sides must be finite".into()));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Instance {
        Instance {
            epsilon,
            ..self.clone()
        }
    }

    pub fn with_samples(&self, samples: SampleSet) -> Instance {
        Instance {
            samples,
            ..self.clone()
        }
    }

    /// Copy with recourse rows normalized to unit max-abs coefficient.
    pub fn normalized(&self) -> Instance {
        let mut inst = self.clone();
        inst.recourse.normalize_rows();
        inst
    }

    pub fn first_stage_cost(&self, x1: &[f64]) -> f64 {
        dot(&self.c1, x1)
    }
}

/// `x₂(ξ) = Aξ + a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePolicy {
    #[serde(rename = "A")]
    pub slope: Matrix,
    #[serde(rename = "a")]
    pub intercept: Vec<f64>,
}

impl AffinePolicy {
    pub fn zeros(n2: usize, m: usize) -> Self {
        AffinePolicy {
            slope: Matrix::zeros(n2, m),
            intercept: vec![0.0; n2],
        }
    }

    pub fn evaluate(&self, xi: &[f64]) -> Vec<f64> {
        self.slope
            .mul_vec(xi)
            .into_iter()
            .zip(&self.intercept)
            .map(|(v, a)| v + a)
            .collect()
    }

    /// `Aᵀc₂`, the direction along which the expected cost moves with ξ.
    pub fn cost_direction(&self, c2: &[f64]) -> Vec<f64> {
        self.slope.tr_mul_vec(c2)
    }
}

/// Location of a policy coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyEntry {
    /// `A[row][col]`
    Slope { row: usize, col: usize },
    /// `a[row]`
    Intercept { row: usize },
}

/// Linear map `θ ↦ (A, a)`; coefficients not listed are fixed at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyStructure {
    pub n2: usize,
    pub m: usize,
    pub parameter_count: usize,
    pub terms: Vec<(PolicyEntry, usize, f64)>,
}

impl PolicyStructure {
    /// One free parameter per entry of `(A, a)`; slopes first (row-major), then intercepts.
    pub fn identity(n2: usize, m: usize) -> Self {
        let mut terms = Vec::with_capacity(n2 * (m + 1));
        for i in 0..n2 {
            for j in 0..m {
                terms.push((PolicyEntry::Slope { row: i, col: j }, i * m + j, 1.0));
            }
        }
        for i in 0..n2 {
            terms.push((PolicyEntry::Intercept { row: i }, n2 * m + i, 1.0));
        }
        PolicyStructure {
            n2,
            m,
            parameter_count: n2 * (m + 1),
            terms,
        }
    }

    /// `A = 0`, free intercepts: the static (here-and-now) recourse.
    pub fn static_recourse(n2: usize, m: usize) -> Self {
        PolicyStructure {
            n2,
            m,
            parameter_count: n2,
            terms: (0..n2).map(|i| (PolicyEntry::Intercept { row: i }, i, 1.0)).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for &(e, p, c) in &self.terms {
            let ok = match e {
                PolicyEntry::Slope { row, col } => row < self.n2 && col < self.m,
                PolicyEntry::Intercept { row } => row < self.n2,
            };
            if !ok || p >= self.parameter_count || !c.is_finite() {
                return Err(ModelError::Invalid(format!("bad policy term {e:?} -> parameter {p} ({c})")));
            }
        }
        Ok(())
    }

    pub fn assemble(&self, theta: &[f64]) -> AffinePolicy {
        let mut pol = AffinePolicy::zeros(self.n2, self.m);
        for &(e, p, c) in &self.terms {
            match e {
                PolicyEntry::Slope { row, col } => {
                    let v = pol.slope.get(row, col) + c * theta[p];
                    pol.slope.set(row, col, v);
                }
                PolicyEntry::Intercept { row } => pol.intercept[row] += c * theta[p],
            }
        }
        pol
    }

    /// Pulls a linear functional on `(A, a)` back to parameter space: returns
    /// the sparse gradient `Σ_entries w(entry)·coef` per parameter.
    pub fn pull_back(&self, weight: impl Fn(PolicyEntry) -> f64) -> Vec<(usize, f64)> {
        let mut acc: Vec<f64> = vec![0.0; self.parameter_count];
        let mut touched = vec![false; self.parameter_count];
        for &(e, p, c) in &self.terms {
            let w = weight(e);
            if w != 0.0 {
                acc[p] += w * c;
                touched[p] = true;
            }
        }
        (0..self.parameter_count)
            .filter(|&p| touched[p] && acc[p] != 0.0)
            .map(|p| (p, acc[p]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_coordinate_is_fixed_in_vertices() {
        let b = BoxSet::new(vec![1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let v: Vec<_> = b.vertices(16).unwrap().collect();
        assert_eq!(v, vec![vec![1.0, 0.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let b = BoxSet::new(vec![0.0; 5], vec![1.0; 5]).unwrap();
        assert!(matches!(b.vertices(16), Err(ModelError::VertexCap { nondegenerate: 5, .. })));
        assert_eq!(b.vertices(32).unwrap().len(), 32);
    }

    #[test]
    fn intersection_reports_empty() {
        let a = BoxSet::new(vec![0.0], vec![1.0]).unwrap();
        let b = BoxSet::new(vec![2.0], vec![3.0]).unwrap();
        assert!(matches!(a.intersect(&b), Err(ModelError::EmptyBox { coord: 0, .. })));
        let c = BoxSet::new(vec![0.0], vec![2.0]).unwrap();
        let d = BoxSet::new(vec![1.0], vec![3.0]).unwrap();
        assert_eq!(c.intersect(&d).unwrap(), BoxSet::new(vec![1.0], vec![2.0]).unwrap());
    }

    #[test]
    fn mean_of_two_points() {
        assert_eq!(sample_mean(&[vec![0.0, 0.0], vec![2.0, 4.0]]), vec![1.0, 2.0]);
    }

    #[test]
    fn samples_outside_support_are_rejected_unless_clamped() {
        let b = BoxSet::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let pts = vec![vec![0.5, 0.5], vec![0.2, 1.5]];
        assert_eq!(
            SampleSet::new(pts.clone(), &b),
            Err(ModelError::SampleOutside {
                sample: 1,
                coord: 1,
                value: 1.5
            })
        );
        let s = SampleSet::new_clamped(pts, &b).unwrap();
        assert_eq!(s.points()[1], vec![0.2, 1.0]);
    }

    #[test]
    fn identity_structure_round_trips() {
        let s = PolicyStructure::identity(2, 3);
        let theta: Vec<f64> = (0..8).map(|v| v as f64).collect();
        let p = s.assemble(&theta);
        assert_eq!(p.slope.row(1), &[3.0, 4.0, 5.0]);
        assert_eq!(p.intercept, vec![6.0, 7.0]);
    }

    #[test]
    fn matrix_serializes_as_nested_rows() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]], 2).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0]]");
        let back: Matrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Matrix>("[[1.0],[2.0,3.0]]").is_err());
    }
}
