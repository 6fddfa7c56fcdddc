use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{NumericError, Result};

/// Real polynomial with coefficients stored in ascending degree order.
/// Trailing (highest-degree) zeros are trimmed on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePoly {
    coeffs: Vec<f64>,
}

impl DensePoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `x - r`
    pub fn linear_factor(r: f64) -> Self {
        Self::new(vec![-r, 1.0])
    }

    /// `lead * prod (x - r_i)`
    pub fn from_roots(lead: f64, roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Self::constant(lead), |acc, &r| &acc * &Self::linear_factor(r))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Division with remainder: `self = q * d + r`, `deg r < deg d`.
    pub fn div_rem(&self, d: &DensePoly) -> Result<(DensePoly, DensePoly)> {
        if d.is_zero() {
            return Err(NumericError::InvalidArgument("division by zero polynomial".into()));
        }
        let dd = d.degree();
        if self.is_zero() || self.degree() < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut q = vec![0.0; self.degree() - dd + 1];
        let lead = d.leading();
        for k in (0..q.len()).rev() {
            let c = rem[k + dd] / lead;
            q[k] = c;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= c * dc;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Self::new(q), Self::new(rem)))
    }

    /// Sum over coefficients of `|a_i| |z|^i`, the scale of `p(z)` used for
    /// backward-error bounds.
    fn abs_scale(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }
}

impl std::ops::Add for &DensePoly {
    type Output = DensePoly;
    fn add(self, o: &DensePoly) -> DensePoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        DensePoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl std::ops::Sub for &DensePoly {
    type Output = DensePoly;
    fn sub(self, o: &DensePoly) -> DensePoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        DensePoly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl std::ops::Mul for &DensePoly {
    type Output = DensePoly;
    fn mul(self, o: &DensePoly) -> DensePoly {
        if self.is_zero() || o.is_zero() {
            return DensePoly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        DensePoly::new(out)
    }
}

/// A distinct root with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootGroup {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl RootGroup {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// Output of [`polyroots`].
#[derive(Debug, Clone)]
pub struct Roots {
    pub groups: Vec<RootGroup>,
    /// max over groups of `|p(z)| / sum |a_i||z|^i`.
    pub backward_error: f64,
}

impl Roots {
    pub fn total_multiplicity(&self) -> usize {
        self.groups.iter().map(|g| g.multiplicity).sum()
    }

    /// Real parts of real roots, repeated by multiplicity, ascending.
    pub fn real_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .groups
            .iter()
            .filter(|g| g.is_real())
            .flat_map(|g| std::iter::repeat_n(g.value.re, g.multiplicity))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

const MAX_DEGREE: usize = 16;
const MERGE_RADIUS: f64 = 1e-7;
const CLUSTER_RADIUS: f64 = 1e-3;
const MULTIPLICITY_TOL: f64 = 1e-6;

fn companion_roots(monic: &[f64]) -> Vec<Complex64> {
    // monic[0..n] are the low coefficients of z^n + ...
    let n = monic.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic[i];
    }
    m.complex_eigenvalues().iter().copied().collect()
}

fn newton_polish(p: &DensePoly, dp: &DensePoly, z: Complex64) -> Complex64 {
    let mut best = z;
    let mut best_val = p.eval_complex(z).norm();
    let mut cur = z;
    for _ in 0..8 {
        let d = dp.eval_complex(cur);
        if d.norm() == 0.0 {
            break;
        }
        cur -= p.eval_complex(cur) / d;
        let v = p.eval_complex(cur).norm();
        if !v.is_finite() {
            break;
        }
        if v < best_val {
            best_val = v;
            best = cur;
        }
    }
    best
}

/// `|p^{(j)}(c)|` small relative to its absolute scale for all `j < m`.
fn has_multiplicity(p: &DensePoly, c: Complex64, m: usize) -> bool {
    let mut d = p.clone();
    for _ in 0..m {
        let scale = d.abs_scale(c.norm()).max(f64::MIN_POSITIVE);
        if d.eval_complex(c).norm() > MULTIPLICITY_TOL * scale {
            return false;
        }
        d = d.derivative();
    }
    true
}

fn clean_imag(z: Complex64) -> Complex64 {
    if z.im.abs() <= 1e-10 * z.norm().max(1.0) {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

fn single_linkage(points: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        let mut j = i;
        while l[j] != r {
            let nx = l[j];
            l[j] = r;
            j = nx;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = points[i].norm().max(points[j].norm()).max(1.0);
            if (points[i] - points[j]).norm() <= radius * scale {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for i in 0..n {
        let r = find(&mut label, i);
        let g = *index.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

fn centroid(points: &[Complex64], idx: &[usize]) -> Complex64 {
    idx.iter().map(|&i| points[i]).sum::<Complex64>() / idx.len() as f64
}

/// All roots of `p` (degree 1..=16) as multiplicity groups.
///
/// Roots come from the eigenvalues of the companion matrix (Francis shifted
/// QR), are polished by Newton steps, and nearby roots are merged when the
/// derivatives up to the cluster size vanish at the centroid.
pub fn polyroots(p: &DensePoly) -> Result<Roots> {
    let deg = p.degree();
    if p.is_zero() || deg == 0 || deg > MAX_DEGREE {
        return Err(NumericError::UnsupportedDegree(deg));
    }
    let zeros = p.coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = DensePoly::new(p.coeffs[zeros..].to_vec());
    let mut groups = Vec::new();
    if zeros > 0 {
        groups.push(RootGroup { value: Complex64::new(0.0, 0.0), multiplicity: zeros });
    }
    if reduced.degree() >= 1 {
        let lead = reduced.leading();
        let monic: Vec<f64> = reduced.coeffs[..reduced.degree()].iter().map(|c| c / lead).collect();
        let dp = reduced.derivative();
        // Newton is only applied to isolated roots; a cluster around a
        // multiple root is represented by the centroid of the unpolished
        // eigenvalues, whose first-order perturbations cancel.
        let raw = companion_roots(&monic);
        for cluster in single_linkage(&raw, CLUSTER_RADIUS) {
            if cluster.len() == 1 {
                let z = clean_imag(newton_polish(&reduced, &dp, raw[cluster[0]]));
                groups.push(RootGroup { value: z, multiplicity: 1 });
                continue;
            }
            let c = centroid(&raw, &cluster);
            if has_multiplicity(&reduced, c, cluster.len()) {
                groups.push(RootGroup { value: clean_imag(c), multiplicity: cluster.len() });
                continue;
            }
            let sub: Vec<Complex64> = cluster.iter().map(|&i| raw[i]).collect();
            for tight in single_linkage(&sub, MERGE_RADIUS) {
                let mut value = centroid(&sub, &tight);
                if tight.len() == 1 {
                    value = newton_polish(&reduced, &dp, value);
                }
                groups.push(RootGroup { value: clean_imag(value), multiplicity: tight.len() });
            }
        }
    }
    let backward_error = groups
        .iter()
        .map(|g| p.eval_complex(g.value).norm() / p.abs_scale(g.value.norm()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    groups.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    Ok(Roots { groups, backward_error })
}
