//! Chart-based exterior calculus.
//!
//! A [`DifferentialForm`] of degree `k` on a chart of dimension `n` stores one
//! coefficient per strictly increasing `k`-multi-index of coordinate axes, in
//! lexicographic order. Coefficients are evaluated lazily through a closure, so
//! derived forms (wedges, pullbacks, derivatives, fiber integrals) are cheap to
//! build and pay only when evaluated.

use std::cell::Cell;
use std::fmt;
use std::sync::{Arc, OnceLock};

use arrayvec::ArrayVec;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_unit_square, integrate_with, QuadConfig, Vals};

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 5;

/// Coordinates of a point or components of a tangent vector.
pub type Coords = ArrayVec<f64, MAX_DIM>;

/// Coefficients of a form over increasing multi-indices.
pub type Coeffs = Vals;

/// Increasing multi-index of coordinate axes.
pub type MultiIndex = ArrayVec<u8, MAX_DIM>;

/// Default differentiation step on unit-scaled charts.
pub const DEFAULT_STEP: f64 = 1e-4;

type Domain = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type CoeffFn = Arc<dyn Fn(&[f64]) -> Result<Coeffs> + Send + Sync>;
type PointFn = Arc<dyn Fn(&[f64]) -> Result<Coords> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64]) -> Result<Jacobian> + Send + Sync>;

/// A coordinate chart: named axes and a membership predicate.
pub struct Chart {
    id: String,
    coord_names: Vec<String>,
    domain: Domain,
}

impl Chart {
    pub fn new<F>(id: &str, coord_names: &[&str], domain: F) -> Arc<Chart>
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        assert!(!coord_names.is_empty() && coord_names.len() <= MAX_DIM, "chart dimension must lie in 1..=5");
        Arc::new(Chart {
            id: id.to_string(),
            coord_names: coord_names.iter().map(|s| s.to_string()).collect(),
            domain: Arc::new(domain),
        })
    }

    /// A chart whose domain is all of ℝⁿ.
    pub fn euclidean(id: &str, coord_names: &[&str]) -> Arc<Chart> {
        Self::new(id, coord_names, |_| true)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.coord_names.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().all(|x| x.is_finite()) && (self.domain)(p)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::DomainError { chart: self.id.clone(), point: p.to_vec() })
        }
    }

    fn same(&self, other: &Chart) -> bool {
        std::ptr::eq(self, other) || self.id == other.id
    }

    fn ensure_same(&self, other: &Chart) -> Result<()> {
        if self.same(other) {
            Ok(())
        } else {
            Err(Error::ChartMismatch { expected: self.id.clone(), found: other.id.clone() })
        }
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart").field("id", &self.id).field("coords", &self.coord_names).finish()
    }
}

/// A point of a chart, validated on construction.
#[derive(Clone, Debug)]
pub struct ChartPoint {
    pub chart: Arc<Chart>,
    pub coords: Coords,
}

impl ChartPoint {
    pub fn new(chart: &Arc<Chart>, coords: &[f64]) -> Result<Self> {
        chart.check(coords)?;
        Ok(Self { chart: chart.clone(), coords: coords.iter().copied().collect() })
    }
}

pub fn coords(xs: &[f64]) -> Coords {
    xs.iter().copied().collect()
}

// ---------------------------------------------------------------------------
// Multi-index tables

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn build_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i as u8);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    if k <= n {
        rec(n, k, 0, &mut MultiIndex::new(), &mut out);
    }
    out
}

/// Increasing `k`-multi-indices over `n` axes in lexicographic order.
pub fn multi_indices(n: usize, k: usize) -> &'static [MultiIndex] {
    static TABLE: OnceLock<Vec<Vec<Vec<MultiIndex>>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=MAX_DIM).map(|n| (0..=MAX_DIM).map(|k| build_indices(n, k)).collect()).collect()
    });
    if n > MAX_DIM || k > MAX_DIM {
        return &[];
    }
    &table[n][k]
}

fn index_position(n: usize, idx: &[u8]) -> usize {
    multi_indices(n, idx.len()).iter().position(|m| m.as_slice() == idx).expect("valid multi-index")
}

/// For each output index of a (p+q)-form: the contributing (pos_a, pos_b, sign) pairs.
type WedgeTable = Vec<Vec<(usize, usize, f64)>>;

fn wedge_table(n: usize, p: usize, q: usize) -> &'static WedgeTable {
    static TABLE: OnceLock<Vec<WedgeTable>> = OnceLock::new();
    let all = TABLE.get_or_init(|| {
        let mut v = Vec::new();
        for n in 0..=MAX_DIM {
            for p in 0..=MAX_DIM {
                for q in 0..=MAX_DIM {
                    v.push(build_wedge_table(n, p, q));
                }
            }
        }
        v
    });
    &all[(n * (MAX_DIM + 1) + p) * (MAX_DIM + 1) + q]
}

fn build_wedge_table(n: usize, p: usize, q: usize) -> WedgeTable {
    if p + q > n {
        return Vec::new();
    }
    multi_indices(n, p + q)
        .iter()
        .map(|k_idx| {
            let mut terms = Vec::new();
            for (ia, a_idx) in multi_indices(n, p).iter().enumerate() {
                if !a_idx.iter().all(|i| k_idx.contains(i)) {
                    continue;
                }
                let b_idx: MultiIndex = k_idx.iter().copied().filter(|i| !a_idx.contains(i)).collect();
                let ib = index_position(n, &b_idx);
                // sign of the shuffle (a_idx, b_idx) -> k_idx
                let mut inversions = 0;
                for x in a_idx {
                    inversions += b_idx.iter().filter(|y| *y < x).count();
                }
                let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                terms.push((ia, ib, sign));
            }
            terms
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Small dense linear algebra

/// Dense matrix of at most 5×5 entries; used for Jacobians and minors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub data: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jacobian {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut j = Self::zeros(n, n);
        for i in 0..n {
            j.data[i][i] = 1.0;
        }
        j
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let mut j = Self::zeros(rows.len(), rows.first().map_or(0, |r| r.len()));
        for (i, r) in rows.iter().enumerate() {
            j.data[i][..r.len()].copy_from_slice(r);
        }
        j
    }

    pub fn mul(&self, other: &Jacobian) -> Jacobian {
        let mut out = Jacobian::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                out.data[i][j] = (0..self.cols).map(|k| self.data[i][k] * other.data[k][j]).sum();
            }
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Coords {
        (0..self.rows).map(|i| (0..self.cols).map(|k| self.data[i][k] * v[k]).sum()).collect()
    }

    /// Numerical rank with relative threshold `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let mut m = self.data;
        let (rows, cols) = (self.rows, self.cols);
        let scale = m.iter().take(rows).flat_map(|r| r[..cols].iter()).fold(0.0_f64, |a, x| a.max(x.abs()));
        let mut rank = 0;
        for c in 0..cols {
            if rank == rows {
                break;
            }
            let piv = (rank..rows).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            if m[piv][c].abs() <= tol * scale.max(f64::MIN_POSITIVE) {
                continue;
            }
            m.swap(rank, piv);
            for r in rank + 1..rows {
                let f = m[r][c] / m[rank][c];
                for k in c..cols {
                    m[r][k] -= f * m[rank][k];
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Determinant of a `k×k` matrix stored in the leading block of `m`.
pub fn det(mut m: [[f64; MAX_DIM]; MAX_DIM], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => {
            let mut d = 1.0;
            for c in 0..k {
                let piv = (c..k).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
                if m[piv][c] == 0.0 {
                    return 0.0;
                }
                if piv != c {
                    m.swap(piv, c);
                    d = -d;
                }
                d *= m[c][c];
                for r in c + 1..k {
                    let f = m[r][c] / m[c][c];
                    for j in c..k {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
            d
        }
    }
}

// ---------------------------------------------------------------------------
// Forms

/// A differential form of fixed degree on a chart.
#[derive(Clone)]
pub struct DifferentialForm {
    chart: Arc<Chart>,
    degree: usize,
    /// `None` marks the zero form.
    coeffs: Option<CoeffFn>,
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentialForm")
            .field("chart", &self.chart.id)
            .field("degree", &self.degree)
            .field("zero", &self.coeffs.is_none())
            .finish()
    }
}

impl DifferentialForm {
    /// Builds a form from a coefficient closure. The closure must return
    /// `C(dim, degree)` values ordered like [`multi_indices`].
    pub fn new<F>(chart: &Arc<Chart>, degree: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Coeffs> + Send + Sync + 'static,
    {
        if degree > chart.dim() {
            return Self::zero(chart, degree);
        }
        Self { chart: chart.clone(), degree, coeffs: Some(Arc::new(f)) }
    }

    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Self {
        Self { chart: chart.clone(), degree, coeffs: None }
    }

    /// A 0-form.
    pub fn function<F>(chart: &Arc<Chart>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(chart, 0, move |p| {
            let mut c = Coeffs::new();
            c.push(f(p));
            Ok(c)
        })
    }

    /// The coordinate differential `d x_axis`.
    pub fn coordinate(chart: &Arc<Chart>, axis: usize) -> Self {
        let n = chart.dim();
        assert!(axis < n);
        Self::new(chart, 1, move |_| {
            let mut c: Coeffs = (0..n).map(|_| 0.0).collect();
            c[axis] = 1.0;
            Ok(c)
        })
    }

    /// A form with constant coefficients.
    pub fn constant(chart: &Arc<Chart>, degree: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), binomial(chart.dim(), degree));
        let c: Coeffs = values.iter().copied().collect();
        Self::new(chart, degree, move |_| Ok(c.clone()))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// True when the form is structurally zero (not merely numerically small).
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_none()
    }

    pub fn num_coeffs(&self) -> usize {
        binomial(self.chart.dim(), self.degree)
    }

    /// Coefficients at `p`; checks the chart domain.
    pub fn coeffs_at(&self, p: &[f64]) -> Result<Coeffs> {
        self.chart.check(p)?;
        match &self.coeffs {
            None => Ok((0..self.num_coeffs()).map(|_| 0.0).collect()),
            Some(f) => f(p),
        }
    }

    pub fn at(&self, p: &ChartPoint) -> Result<Coeffs> {
        self.chart.ensure_same(&p.chart)?;
        self.coeffs_at(&p.coords)
    }

    /// Value of a 0-form.
    pub fn value_at(&self, p: &[f64]) -> Result<f64> {
        if self.degree != 0 {
            return Err(Error::DegreeError(format!("value_at needs a 0-form, got degree {}", self.degree)));
        }
        Ok(self.coeffs_at(p)?[0])
    }

    /// Evaluates the form at `p` on `degree` tangent vectors.
    pub fn eval(&self, p: &[f64], vectors: &[&[f64]]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(Error::DegreeError(format!(
                "{}-form evaluated on {} vectors",
                self.degree,
                vectors.len()
            )));
        }
        let c = self.coeffs_at(p)?;
        Ok(pair_with_vectors(self.chart.dim(), self.degree, &c, vectors))
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.chart.ensure_same(&other.chart)?;
        if self.degree != other.degree {
            return Err(Error::DegreeError(format!("cannot add degrees {} and {}", self.degree, other.degree)));
        }
        match (&self.coeffs, &other.coeffs) {
            (None, _) => Ok(other.clone()),
            (_, None) => Ok(self.clone()),
            (Some(f), Some(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Ok(Self::new(&self.chart, self.degree, move |p| {
                    let mut a = f(p)?;
                    let b = g(p)?;
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x += y;
                    }
                    Ok(a)
                }))
            }
        }
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> DifferentialForm {
        match &self.coeffs {
            None => self.clone(),
            Some(_) if s == 0.0 => Self::zero(&self.chart, self.degree),
            Some(f) => {
                let f = f.clone();
                Self::new(&self.chart, self.degree, move |p| {
                    let mut a = f(p)?;
                    a.iter_mut().for_each(|x| *x *= s);
                    Ok(a)
                })
            }
        }
    }

    /// Multiplies by a scalar function (wedge with a 0-form).
    pub fn multiply<F>(&self, g: F) -> DifferentialForm
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        match &self.coeffs {
            None => self.clone(),
            Some(f) => {
                let f = f.clone();
                Self::new(&self.chart, self.degree, move |p| {
                    let s = g(p);
                    let mut a = f(p)?;
                    a.iter_mut().for_each(|x| *x *= s);
                    Ok(a)
                })
            }
        }
    }

    /// Sup-norm of the coefficients over a point set.
    pub fn sup_norm(&self, points: &[Coords]) -> Result<f64> {
        let mut m = 0.0_f64;
        for p in points {
            for c in self.coeffs_at(p)? {
                m = m.max(c.abs());
            }
        }
        Ok(m)
    }
}

/// Σ_I c_I det(V[I, :]) for a k-form with coefficients `c`.
pub fn pair_with_vectors(n: usize, k: usize, c: &[f64], vectors: &[&[f64]]) -> f64 {
    let mut total = 0.0;
    for (idx, coeff) in multi_indices(n, k).iter().zip(c) {
        if *coeff == 0.0 {
            continue;
        }
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (r, &axis) in idx.iter().enumerate() {
            for (col, v) in vectors.iter().enumerate() {
                m[r][col] = v[axis as usize];
            }
        }
        total += coeff * det(m, k);
    }
    total
}

/// Exterior product.
pub fn wedge(a: &DifferentialForm, b: &DifferentialForm) -> Result<DifferentialForm> {
    a.chart.ensure_same(&b.chart)?;
    let n = a.chart.dim();
    let (p, q) = (a.degree, b.degree);
    if p + q > n || a.is_zero() || b.is_zero() {
        return Ok(DifferentialForm::zero(&a.chart, p + q));
    }
    let (fa, fb) = (a.coeffs.clone().unwrap(), b.coeffs.clone().unwrap());
    let table = wedge_table(n, p, q);
    Ok(DifferentialForm::new(&a.chart, p + q, move |pt| {
        let ca = fa(pt)?;
        let cb = fb(pt)?;
        Ok(table.iter().map(|terms| terms.iter().map(|&(i, j, s)| s * ca[i] * cb[j]).sum()).collect())
    }))
}

/// Central-difference partial derivatives of all coefficients along every axis,
/// with one Richardson level: `(4 D(h/2) − D(h)) / 3`.
fn partials(f: &CoeffFn, chart: &Chart, p: &[f64], h: f64) -> Result<ArrayVec<Coeffs, MAX_DIM>> {
    let n = p.len();
    let mut out = ArrayVec::new();
    let mut q: Coords = p.iter().copied().collect();
    for j in 0..n {
        let mut sample = |offset: f64| -> Result<Coeffs> {
            q[j] = p[j] + offset;
            chart.check(&q)?;
            let v = f(&q);
            q[j] = p[j];
            v
        };
        let fp = sample(h)?;
        let fm = sample(-h)?;
        let hp = sample(0.5 * h)?;
        let hm = sample(-0.5 * h)?;
        let d: Coeffs = (0..fp.len())
            .map(|c| {
                let big = (fp[c] - fm[c]) / (2.0 * h);
                let small = (hp[c] - hm[c]) / h;
                (4.0 * small - big) / 3.0
            })
            .collect();
        out.push(d);
    }
    Ok(out)
}

/// Exterior derivative by numerical differentiation with step `h`.
pub fn exterior_derivative(a: &DifferentialForm, h: f64) -> Result<DifferentialForm> {
    let n = a.chart.dim();
    let k = a.degree;
    if k >= n {
        return Err(Error::DegreeError(format!("d of a {k}-form on a {n}-dimensional chart")));
    }
    let Some(f) = a.coeffs.clone() else {
        return Ok(DifferentialForm::zero(&a.chart, k + 1));
    };
    let chart = a.chart.clone();
    // (da)_K = Σ_m (−1)^m ∂_{K_m} a_{K \ K_m}
    let terms: Vec<Vec<(usize, usize, f64)>> = multi_indices(n, k + 1)
        .iter()
        .map(|kidx| {
            (0..=k)
                .map(|m| {
                    let rest: MultiIndex =
                        kidx.iter().enumerate().filter(|(i, _)| *i != m).map(|(_, &x)| x).collect();
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    (kidx[m] as usize, index_position(n, &rest), sign)
                })
                .collect()
        })
        .collect();
    let chart_inner = chart.clone();
    Ok(DifferentialForm::new(&chart, k + 1, move |p| {
        let d = partials(&f, &chart_inner, p, h)?;
        Ok(terms.iter().map(|t| t.iter().map(|&(axis, pos, s)| s * d[axis][pos]).sum()).collect())
    }))
}

// ---------------------------------------------------------------------------
// Smooth maps

/// A smooth map between charts with analytic or numerical Jacobian.
#[derive(Clone)]
pub struct SmoothMap {
    pub source: Arc<Chart>,
    pub target: Arc<Chart>,
    eval: PointFn,
    jacobian: Option<JacobianFn>,
    h: f64,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("source", &self.source.id)
            .field("target", &self.target.id)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(source: &Arc<Chart>, target: &Arc<Chart>, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Coords> + Send + Sync + 'static,
    {
        Self { source: source.clone(), target: target.clone(), eval: Arc::new(eval), jacobian: None, h: DEFAULT_STEP }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64]) -> Result<Jacobian> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn identity(chart: &Arc<Chart>) -> Self {
        let n = chart.dim();
        Self::new(chart, chart, |p| Ok(p.iter().copied().collect())).with_jacobian(move |_| Ok(Jacobian::identity(n)))
    }

    pub fn apply(&self, p: &[f64]) -> Result<Coords> {
        self.source.check(p)?;
        let q = (self.eval)(p)?;
        self.target.check(&q)?;
        Ok(q)
    }

    /// Analytic Jacobian if supplied, otherwise the numerical one.
    pub fn jacobian(&self, p: &[f64]) -> Result<Jacobian> {
        match &self.jacobian {
            Some(j) => {
                self.source.check(p)?;
                j(p)
            }
            None => self.numerical_jacobian(p),
        }
    }

    /// Central-difference Jacobian with one Richardson level.
    pub fn numerical_jacobian(&self, p: &[f64]) -> Result<Jacobian> {
        let n = self.source.dim();
        let m = self.target.dim();
        let mut jac = Jacobian::zeros(m, n);
        let h = self.h;
        let mut q: Coords = p.iter().copied().collect();
        for j in 0..n {
            let mut sample = |offset: f64| -> Result<Coords> {
                q[j] = p[j] + offset;
                self.source.check(&q)?;
                let v = (self.eval)(&q);
                q[j] = p[j];
                v
            };
            let fp = sample(h)?;
            let fm = sample(-h)?;
            let hp = sample(0.5 * h)?;
            let hm = sample(-0.5 * h)?;
            for i in 0..m {
                let big = (fp[i] - fm[i]) / (2.0 * h);
                let small = (hp[i] - hm[i]) / h;
                jac.data[i][j] = (4.0 * small - big) / 3.0;
            }
        }
        Ok(jac)
    }

    /// `g ∘ self`.
    pub fn then(&self, g: &SmoothMap) -> Result<SmoothMap> {
        self.target.ensure_same(&g.source)?;
        let (f1, f2) = (self.clone(), g.clone());
        let (j1, j2) = (self.clone(), g.clone());
        Ok(SmoothMap::new(&self.source, &g.target, move |p| f2.apply(&f1.apply(p)?))
            .with_jacobian(move |p| {
                let q = j1.apply(p)?;
                Ok(j2.jacobian(&q)?.mul(&j1.jacobian(p)?))
            }))
    }
}

/// Pullback of a form along a smooth map.
pub fn pullback(f: &SmoothMap, a: &DifferentialForm) -> Result<DifferentialForm> {
    f.target.ensure_same(&a.chart)?;
    let k = a.degree;
    let n = f.source.dim();
    let m = f.target.dim();
    if a.is_zero() || k > n {
        return Ok(DifferentialForm::zero(&f.source, k));
    }
    let map = f.clone();
    let form = a.clone();
    Ok(DifferentialForm::new(&f.source, k, move |p| {
        let q = map.apply(p)?;
        let c = form.coeffs_at(&q)?;
        let jac = map.jacobian(p)?;
        let mut out = Coeffs::new();
        for src in multi_indices(n, k) {
            let mut s = 0.0;
            for (tgt, coeff) in multi_indices(m, k).iter().zip(&c) {
                if *coeff == 0.0 {
                    continue;
                }
                let mut minor = [[0.0; MAX_DIM]; MAX_DIM];
                for (r, &ti) in tgt.iter().enumerate() {
                    for (cc, &si) in src.iter().enumerate() {
                        minor[r][cc] = jac.data[ti as usize][si as usize];
                    }
                }
                s += coeff * det(minor, k);
            }
            out.push(s);
        }
        Ok(out)
    }))
}

// ---------------------------------------------------------------------------
// Fiber integration

/// One sample point of a fiber parametrization.
#[derive(Clone, Debug)]
pub struct FiberSample {
    /// Point of the total space.
    pub point: Coords,
    /// Partial derivatives of the cell parametrization, in total-space coordinates.
    pub tangents: ArrayVec<Coords, 2>,
    /// Lifts of the base coordinate vectors to the total space.
    pub lifts: ArrayVec<Coords, MAX_DIM>,
}

/// A fiber bundle with compact fibers covered (up to measure zero) by cells
/// parametrized over `[0,1]^l`.
pub trait FiberBundle: Send + Sync {
    fn base(&self) -> &Arc<Chart>;
    fn total(&self) -> &Arc<Chart>;
    fn fiber_dim(&self) -> usize;
    fn num_cells(&self) -> usize;
    /// Orientation of the cell parametrization relative to the fiber orientation.
    fn cell_sign(&self, cell: usize) -> f64;
    fn sample(&self, base_point: &[f64], cell: usize, params: &[f64]) -> Result<FiberSample>;
}

/// Integration along the fibers: the unique form with
/// `∫_B t ∧ π_* a = ∫_E π^* t ∧ a`, fiber directions taken last.
pub fn fiber_integrate<B>(bundle: &Arc<B>, a: &DifferentialForm, cfg: &QuadConfig) -> Result<DifferentialForm>
where
    B: FiberBundle + 'static,
{
    bundle.total().ensure_same(&a.chart)?;
    let l = bundle.fiber_dim();
    if a.degree < l {
        return Err(Error::DegreeError(format!("fiber integration of a {}-form over {l}-dimensional fibers", a.degree)));
    }
    let out_deg = a.degree - l;
    let base = bundle.base().clone();
    if a.is_zero() {
        return Ok(DifferentialForm::zero(&base, out_deg));
    }
    let nb = base.dim();
    let ne = bundle.total().dim();
    let k = a.degree;
    let bundle = bundle.clone();
    let form = a.clone();
    let cfg = *cfg;
    Ok(DifferentialForm::new(&base, out_deg, move |b| {
        let counter = Cell::new(0);
        let out_indices = multi_indices(nb, out_deg);
        let mut total: Coeffs = out_indices.iter().map(|_| 0.0).collect();
        for cell in 0..bundle.num_cells() {
            let sign = bundle.cell_sign(cell);
            let integrand = |params: &[f64]| -> Result<Vals> {
                let s = bundle.sample(b, cell, params)?;
                let c = form.coeffs_at(&s.point)?;
                let mut vals = Vals::new();
                for idx in out_indices {
                    let mut vecs: ArrayVec<&[f64], MAX_DIM> = ArrayVec::new();
                    for &i in idx {
                        vecs.push(&s.lifts[i as usize]);
                    }
                    for t in &s.tangents {
                        vecs.push(t);
                    }
                    vals.push(pair_with_vectors(ne, k, &c, &vecs));
                }
                Ok(vals)
            };
            let r = match l {
                0 => integrand(&[])?,
                1 => integrate_with(|u| integrand(&[u]), 0.0, 1.0, &cfg, &counter)?.value,
                2 => integrate_unit_square(|u, v| integrand(&[u, v]), &cfg, &counter)?.value,
                _ => return Err(Error::DegreeError(format!("fiber dimension {l} unsupported"))),
            };
            for (t, v) in total.iter_mut().zip(&r) {
                *t += sign * v;
            }
        }
        Ok(total)
    }))
}
