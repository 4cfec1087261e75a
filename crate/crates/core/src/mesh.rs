//! Uniform grids on intervals and rectangles with homogeneous Dirichlet
//! boundary, the finite-difference Laplacian, discrete norms, the first
//! Dirichlet eigenvalue and Sobolev embedding constants.
//!
//! Grid functions store only interior nodes; boundary values are zero by
//! construction. Interior node `(i, j)` (zero-based, excluding the boundary)
//! lives at index `i + (nx - 1) * j` and has coordinates
//! `((i + 1) hx, (j + 1) hy)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, dot, solve_tridiagonal_const};
use crate::numeric::csum;

const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDomain {
    dimension: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
    spacing: [f64; 2],
}

/// Builds a 1D interval `(0, L)` or a 2D rectangle `(0, Lx) × (0, Ly)`.
pub fn build_domain(dimension: usize, lengths: &[f64], cells_per_axis: &[usize]) -> Result<DiscreteDomain> {
    if dimension != 1 && dimension != 2 {
        return Err(Error::Config(format!("dimension must be 1 or 2, got {dimension}")));
    }
    if lengths.len() != dimension || cells_per_axis.len() != dimension {
        return Err(Error::Config(format!(
            "expected {dimension} lengths and cell counts, got {} and {}",
            lengths.len(),
            cells_per_axis.len()
        )));
    }
    for &l in lengths {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config(format!("domain length must be positive, got {l}")));
        }
    }
    for &n in cells_per_axis {
        if n < MIN_CELLS {
            return Err(Error::Config(format!(
                "need at least {MIN_CELLS} cells per axis, got {n}"
            )));
        }
    }
    let mut d = DiscreteDomain {
        dimension,
        lengths: [lengths[0], 1.0],
        cells: [cells_per_axis[0], 2],
        spacing: [0.0; 2],
    };
    if dimension == 2 {
        d.lengths[1] = lengths[1];
        d.cells[1] = cells_per_axis[1];
    }
    d.spacing = [
        d.lengths[0] / d.cells[0] as f64,
        d.lengths[1] / d.cells[1] as f64,
    ];
    Ok(d)
}

impl DiscreteDomain {
    pub fn interval(length: f64, cells: usize) -> Result<Self> {
        build_domain(1, &[length], &[cells])
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        build_domain(2, &[lx, ly], &[nx, ny])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dimension]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dimension]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dimension]
    }

    /// Interior nodes per axis; the second entry is 1 in 1D.
    pub fn interior_shape(&self) -> (usize, usize) {
        let mx = self.cells[0] - 1;
        let my = if self.dimension == 2 { self.cells[1] - 1 } else { 1 };
        (mx, my)
    }

    pub fn interior_len(&self) -> usize {
        let (mx, my) = self.interior_shape();
        mx * my
    }

    /// Quadrature weight `h^d` of the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        if self.dimension == 1 {
            self.spacing[0]
        } else {
            self.spacing[0] * self.spacing[1]
        }
    }

    /// |Ω|
    pub fn measure(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn node_coords(&self, index: usize) -> (f64, f64) {
        let (mx, _) = self.interior_shape();
        let i = index % mx;
        let j = index / mx;
        let x = (i + 1) as f64 * self.spacing[0];
        let y = if self.dimension == 2 {
            (j + 1) as f64 * self.spacing[1]
        } else {
            0.0
        };
        (x, y)
    }

    /// Coordinates of all boundary nodes (corners included once).
    pub fn boundary_nodes(&self) -> Vec<(f64, f64)> {
        if self.dimension == 1 {
            return vec![(0.0, 0.0), (self.lengths[0], 0.0)];
        }
        let (nx, ny) = (self.cells[0], self.cells[1]);
        let (hx, hy) = (self.spacing[0], self.spacing[1]);
        let mut pts = Vec::with_capacity(2 * (nx + ny));
        for i in 0..=nx {
            let x = i as f64 * hx;
            pts.push((x, 0.0));
            pts.push((x, self.lengths[1]));
        }
        for j in 1..ny {
            let y = j as f64 * hy;
            pts.push((0.0, y));
            pts.push((self.lengths[0], y));
        }
        pts
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.interior_len() {
            return Err(Error::Usage(format!(
                "field has {len} values but domain has {} interior nodes",
                self.interior_len()
            )));
        }
        Ok(())
    }
}

/// Real values on the interior nodes of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: DiscreteDomain,
    values: Vec<f64>,
}

impl Field {
    pub fn new(domain: DiscreteDomain, values: Vec<f64>) -> Result<Self> {
        domain.check_len(values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at node {k}")));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: DiscreteDomain) -> Self {
        Self {
            domain,
            values: vec![0.0; domain.interior_len()],
        }
    }

    /// Samples `f(x, y)` at interior nodes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(domain: DiscreteDomain, f: F) -> Result<Self> {
        let values = (0..domain.interior_len())
            .map(|k| {
                let (x, y) = domain.node_coords(k);
                f(x, y)
            })
            .collect();
        Self::new(domain, values)
    }

    /// Wraps values without the finiteness check. Used by the integrator,
    /// which detects overflow itself.
    pub(crate) fn from_raw(domain: DiscreteDomain, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.interior_len());
        Self { domain, values }
    }

    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field::from_raw(self.domain, self.values.iter().map(|v| s * v).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn same_domain(u: &Field, v: &Field) -> Result<()> {
    if u.domain != v.domain {
        return Err(Error::Usage("fields live on different domains".into()));
    }
    Ok(())
}

/// `out = Δ_h u` with zero Dirichlet ghosts.
pub(crate) fn apply_laplacian(domain: &DiscreteDomain, u: &[f64], out: &mut [f64]) {
    let (mx, my) = domain.interior_shape();
    let ihx2 = 1.0 / (domain.spacing[0] * domain.spacing[0]);
    if domain.dimension == 1 {
        for i in 0..mx {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < mx { u[i + 1] } else { 0.0 };
            out[i] = (left - 2.0 * u[i] + right) * ihx2;
        }
        return;
    }
    let ihy2 = 1.0 / (domain.spacing[1] * domain.spacing[1]);
    for j in 0..my {
        for i in 0..mx {
            let k = i + mx * j;
            let left = if i > 0 { u[k - 1] } else { 0.0 };
            let right = if i + 1 < mx { u[k + 1] } else { 0.0 };
            let down = if j > 0 { u[k - mx] } else { 0.0 };
            let up = if j + 1 < my { u[k + mx] } else { 0.0 };
            out[k] = (left - 2.0 * u[k] + right) * ihx2 + (down - 2.0 * u[k] + up) * ihy2;
        }
    }
}

pub fn laplacian(u: &Field) -> Field {
    let mut out = vec![0.0; u.values.len()];
    apply_laplacian(&u.domain, &u.values, &mut out);
    Field::from_raw(u.domain, out)
}

pub(crate) fn l2_dot(domain: &DiscreteDomain, u: &[f64], v: &[f64]) -> f64 {
    domain.cell_volume() * dot(u, v)
}

/// Discrete `(∇u, ∇v)` from forward differences over every cell edge,
/// including the half-edges touching the boundary.
pub(crate) fn grad_dot(domain: &DiscreteDomain, u: &[f64], v: &[f64]) -> f64 {
    let (mx, my) = domain.interior_shape();
    let at = |w: &[f64], i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i as usize >= mx || j as usize >= my {
            0.0
        } else {
            w[i as usize + mx * j as usize]
        }
    };
    let hx = domain.spacing[0];
    if domain.dimension == 1 {
        let s = csum((0..=mx as isize).map(|i| {
            let du = at(u, i, 0) - at(u, i - 1, 0);
            let dv = at(v, i, 0) - at(v, i - 1, 0);
            du * dv
        }));
        return s / hx;
    }
    let hy = domain.spacing[1];
    let sx = csum((0..my as isize).flat_map(|j| {
        (0..=mx as isize).map(move |i| {
            let du = at(u, i, j) - at(u, i - 1, j);
            let dv = at(v, i, j) - at(v, i - 1, j);
            du * dv
        })
    }));
    let sy = csum((0..mx as isize).flat_map(|i| {
        (0..=my as isize).map(move |j| {
            let du = at(u, i, j) - at(u, i, j - 1);
            let dv = at(v, i, j) - at(v, i, j - 1);
            du * dv
        })
    }));
    sx * hy / hx + sy * hx / hy
}

pub fn inner_l2(u: &Field, v: &Field) -> Result<f64> {
    same_domain(u, v)?;
    Ok(l2_dot(&u.domain, &u.values, &v.values))
}

pub fn norm_l2_sq(u: &Field) -> f64 {
    l2_dot(&u.domain, &u.values, &u.values)
}

pub fn norm_grad_sq(u: &Field) -> f64 {
    grad_dot(&u.domain, &u.values, &u.values)
}

/// `‖u‖² = ‖u‖₂² + ‖∇u‖₂²`
pub fn norm_full_sq(u: &Field) -> f64 {
    norm_l2_sq(u) + norm_grad_sq(u)
}

/// The H¹₀ inner product `⟨u, v⟩ = (u, v) + (∇u, ∇v)`.
pub fn inner_full(u: &Field, v: &Field) -> Result<f64> {
    same_domain(u, v)?;
    Ok(l2_dot(&u.domain, &u.values, &v.values) + grad_dot(&u.domain, &u.values, &v.values))
}

/// Discrete `L^r` norm with the rectangle rule; `r = ∞` gives the max norm.
pub fn norm_lr(u: &Field, r: f64) -> f64 {
    if r.is_infinite() {
        return u.sup_norm();
    }
    let s = csum(u.values.iter().map(|v| v.abs().powf(r)));
    (u.domain.cell_volume() * s).powf(1.0 / r)
}

/// First Dirichlet eigenvalue of `−Δ` on the continuous box.
pub fn lambda1(domain: &DiscreteDomain) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    domain.lengths().iter().map(|l| pi2 / (l * l)).sum()
}

/// Solves `(−Δ_h) w = rhs`.
pub(crate) fn solve_neg_laplacian(domain: &DiscreteDomain, rhs: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
    if domain.dimension == 1 {
        let ihx2 = 1.0 / (domain.spacing[0] * domain.spacing[0]);
        return solve_tridiagonal_const(2.0 * ihx2, -ihx2, rhs);
    }
    let d = *domain;
    conjugate_gradient(
        |x, y| {
            apply_laplacian(&d, x, y);
            y.iter_mut().for_each(|v| *v = -*v);
        },
        rhs,
        guess,
        1e-12,
        20 * domain.interior_len(),
    )
}

/// Smallest eigenvalue of the stencil matrix `−Δ_h` by inverse power iteration.
pub fn lambda1_discrete(domain: &DiscreteDomain) -> Result<f64> {
    const REL_TOL: f64 = 1e-10;
    const MAX_ITER: usize = 10_000;
    let n = domain.interior_len();
    // Positive start overlaps the ground state.
    let mut v: Vec<f64> = (0..n)
        .map(|k| {
            let (x, y) = domain.node_coords(k);
            let bx = x * (domain.lengths[0] - x);
            let by = if domain.dimension == 2 { y * (domain.lengths[1] - y) } else { 1.0 };
            1.0 + bx * by
        })
        .collect();
    let mut lambda_old = f64::INFINITY;
    let mut av = vec![0.0; n];
    for _ in 0..MAX_ITER {
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let w = solve_neg_laplacian(domain, &v, None)?;
        v = w;
        apply_laplacian(domain, &v, &mut av);
        let lambda = -dot(&v, &av) / dot(&v, &v);
        if (lambda - lambda_old).abs() <= REL_TOL * lambda.abs() {
            return Ok(lambda);
        }
        lambda_old = lambda;
    }
    Err(Error::Numerical(format!(
        "inverse power iteration did not converge in {MAX_ITER} iterations"
    )))
}

/// An upper bound (1D, certified) or estimate (2D) for the Sobolev constant
/// `S_r` in `‖v‖_r ≤ S_r ‖∇v‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConstant {
    /// Exponent; `f64::INFINITY` for the sup norm.
    pub r: f64,
    pub value: f64,
    pub certified: bool,
    pub formula: &'static str,
}

/// Random starts for the 2D Rayleigh-quotient search.
pub const EMBEDDING_STARTS: usize = 32;
/// Safety factor applied to the 2D discrete estimate.
pub const EMBEDDING_SAFETY: f64 = 1.25;

pub fn embed_const(domain: &DiscreteDomain, r: f64, seed: u64) -> Result<EmbeddingConstant> {
    if r.is_nan() || r < 2.0 {
        return Err(Error::Config(format!("embedding exponent must be ≥ 2, got {r}")));
    }
    if domain.dimension == 1 {
        let l = domain.lengths[0];
        if r == 2.0 {
            return Ok(EmbeddingConstant {
                r,
                value: 1.0 / lambda1(domain).sqrt(),
                certified: true,
                formula: "1/sqrt(lambda1)",
            });
        }
        // ‖v‖_∞ ≤ (√L/2)‖v′‖₂ and ‖v‖_r ≤ L^(1/r)‖v‖_∞
        let exponent = if r.is_infinite() { 0.5 } else { 1.0 / r + 0.5 };
        return Ok(EmbeddingConstant {
            r,
            value: l.powf(exponent) / 2.0,
            certified: true,
            formula: "L^(1/r + 1/2)/2",
        });
    }
    if r.is_infinite() {
        return Err(Error::Config(
            "H1_0 does not embed into L^inf in two dimensions".into(),
        ));
    }
    let estimate = estimate_embedding_ratio(domain, r, EMBEDDING_STARTS, seed)?;
    Ok(EmbeddingConstant {
        r,
        value: EMBEDDING_SAFETY * estimate,
        certified: false,
        formula: "1.25 * max discrete ||v||_r/||grad v||_2 (estimated, not certified)",
    })
}

/// Maximizes the discrete quotient `‖v‖_r / ‖∇v‖₂` by projected gradient
/// ascent on the unit sphere of the discrete energy norm, keeping the best
/// value over `starts` random initial fields.
pub fn estimate_embedding_ratio(domain: &DiscreteDomain, r: f64, starts: usize, seed: u64) -> Result<f64> {
    let n = domain.interior_len();
    let vol = domain.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let energy = |v: &[f64]| grad_dot(domain, v, v);
    let objective = |v: &[f64]| vol * csum(v.iter().map(|x| x.abs().powf(r)));
    let normalize = |v: &mut Vec<f64>| {
        let e = energy(v).sqrt();
        v.iter_mut().for_each(|x| *x /= e);
    };
    let mut best: f64 = 0.0;
    for _ in 0..starts {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut v);
        let mut phi = objective(&v);
        let mut step = 1.0;
        let mut guess: Option<Vec<f64>> = None;
        for _ in 0..300 {
            let rhs: Vec<f64> = v.iter().map(|x| r * x.abs().powf(r - 2.0) * x).collect();
            let g = solve_neg_laplacian(domain, &rhs, guess.as_deref())?;
            let along = grad_dot(domain, &g, &v);
            let tangent: Vec<f64> = g.iter().zip(&v).map(|(gi, vi)| gi - along * vi).collect();
            guess = Some(g);
            let scale = along.abs().max(f64::MIN_POSITIVE);
            let mut improved = false;
            for _ in 0..40 {
                let mut trial: Vec<f64> = v.iter().zip(&tangent).map(|(vi, ti)| vi + step / scale * ti).collect();
                normalize(&mut trial);
                let phi_trial = objective(&trial);
                if phi_trial > phi {
                    let gain = (phi_trial - phi) / phi;
                    v = trial;
                    phi = phi_trial;
                    step = (step * 2.0).min(1e6);
                    improved = gain > 1e-13;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(phi.powf(1.0 / r));
    }
    if !best.is_finite() || best <= 0.0 {
        return Err(Error::Numerical("embedding estimate failed".into()));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_field(d: DiscreteDomain, amp: f64) -> Field {
        Field::from_fn(d, |x, _| amp * (PI * x).sin()).unwrap()
    }

    #[test]
    fn domain_counts_and_spacing() {
        let d = DiscreteDomain::interval(1.0, 256).unwrap();
        assert_eq!(d.interior_len(), 255);
        assert_eq!(d.spacing()[0], 1.0 / 256.0);
        let d2 = DiscreteDomain::rectangle(1.0, 1.0, 64, 64).unwrap();
        assert_eq!(d2.interior_len(), 3969);
    }

    #[test]
    fn domain_rejects_bad_input() {
        assert!(matches!(build_domain(1, &[0.0], &[256]), Err(Error::Config(_))));
        assert!(matches!(build_domain(1, &[1.0], &[3]), Err(Error::Config(_))));
        assert!(matches!(build_domain(3, &[1.0; 3], &[8; 3]), Err(Error::Config(_))));
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let d = DiscreteDomain::rectangle(1.0, 2.0, 8, 6).unwrap();
        assert!(laplacian(&Field::zeros(d)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        let d = DiscreteDomain::interval(1.0, 64).unwrap();
        let u = Field::from_fn(d, |x, _| x * (1.0 - x)).unwrap();
        for v in laplacian(&u).values() {
            assert!((v + 2.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn laplacian_of_sine_within_taylor_bound() {
        let n = 128;
        let d = DiscreteDomain::interval(1.0, n).unwrap();
        let h = 1.0 / n as f64;
        let lap = laplacian(&sin_field(d, 1.0));
        let bound = PI.powi(4) / 12.0 * h * h * 1.01;
        for k in 0..d.interior_len() {
            let (x, _) = d.node_coords(k);
            let err = (lap.values()[k] + PI * PI * (PI * x).sin()).abs();
            assert!(err <= bound, "node {k}: {err} > {bound}");
        }
    }

    #[test]
    fn sine_norms_match_integrals() {
        let d = DiscreteDomain::interval(1.0, 256).unwrap();
        let h2 = (1.0f64 / 256.0).powi(2);
        let u = sin_field(d, 1.0);
        assert!((norm_l2_sq(&u) - 0.5).abs() < 10.0 * h2);
        assert!((norm_grad_sq(&u) - PI * PI / 2.0).abs() < 10.0 * h2);
        let u6 = sin_field(d, 6.0);
        let target = 18.0 * (1.0 + PI * PI);
        assert!((norm_full_sq(&u6) - target).abs() < 200.0 * h2 * 10.0);
        assert_eq!(inner_l2(&u, &u).unwrap(), norm_l2_sq(&u));
    }

    #[test]
    fn mismatched_domains_are_usage_errors() {
        let a = Field::zeros(DiscreteDomain::interval(1.0, 8).unwrap());
        let b = Field::zeros(DiscreteDomain::interval(2.0, 8).unwrap());
        assert!(matches!(inner_l2(&a, &b), Err(Error::Usage(_))));
        assert!(Field::new(*a.domain(), vec![0.0; 3]).is_err());
        assert!(Field::new(*a.domain(), vec![f64::NAN; 7]).is_err());
    }

    #[test]
    fn analytic_lambda1() {
        let d = DiscreteDomain::interval(1.0, 16).unwrap();
        assert!((lambda1(&d) - PI * PI).abs() < 1e-14);
        let d = DiscreteDomain::interval(2.0, 16).unwrap();
        assert!((lambda1(&d) - PI * PI / 4.0).abs() < 1e-14);
        let d = DiscreteDomain::rectangle(1.0, 1.0, 16, 16).unwrap();
        assert!((lambda1(&d) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn discrete_lambda1_matches_stencil_eigenvalue() {
        // Closed-form eigenvalue of the 3-point stencil: (4/h²) sin²(πh/2L).
        for &(l, n) in &[(1.0, 32usize), (2.0, 50)] {
            let d = DiscreteDomain::interval(l, n).unwrap();
            let h = l / n as f64;
            let exact = 4.0 / (h * h) * (PI * h / (2.0 * l)).sin().powi(2);
            let got = lambda1_discrete(&d).unwrap();
            assert!((got - exact).abs() < 1e-8 * exact, "{got} vs {exact}");
        }
        let d = DiscreteDomain::rectangle(1.0, 1.0, 16, 16).unwrap();
        let h = 1.0 / 16.0;
        let exact = 2.0 * 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((lambda1_discrete(&d).unwrap() - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn embedding_constants_1d() {
        let d = DiscreteDomain::interval(1.0, 16).unwrap();
        assert!((embed_const(&d, 6.0, 0).unwrap().value - 0.5).abs() < 1e-15);
        assert!((embed_const(&d, 2.0, 0).unwrap().value - 1.0 / PI).abs() < 1e-15);
        let d4 = DiscreteDomain::interval(4.0, 16).unwrap();
        assert!((embed_const(&d4, f64::INFINITY, 0).unwrap().value - 1.0).abs() < 1e-15);
        assert!(matches!(embed_const(&d, 1.5, 0), Err(Error::Config(_))));
    }

    #[test]
    fn discrete_ratio_stays_below_certified_1d_constant() {
        let d = DiscreteDomain::interval(1.0, 32).unwrap();
        for &r in &[4.0, 6.0] {
            let est = estimate_embedding_ratio(&d, r, 8, 7).unwrap();
            let cert = embed_const(&d, r, 0).unwrap().value;
            assert!(est <= cert, "r={r}: {est} > {cert}");
            assert!(est > 0.5 * cert);
        }
    }

    #[test]
    fn embedding_2d_is_flagged_estimated() {
        let d = DiscreteDomain::rectangle(1.0, 1.0, 12, 12).unwrap();
        let c = embed_const(&d, 4.0, 3).unwrap();
        assert!(!c.certified);
        assert!(c.value > 0.0);
        assert_eq!(c, embed_const(&d, 4.0, 3).unwrap());
        assert!(embed_const(&d, f64::INFINITY, 3).is_err());
    }
}
