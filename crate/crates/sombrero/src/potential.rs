//! The sombrero (Mexican-hat) potential: evaluation, derivatives and the
//! complete critical-point structure under arbitrary forcing.
//!
//! The unperturbed potential on the plane is
//!
//! ```text
//! V0(x, y) = r^4/4 - r^2/2 - a x^2 + b y^2,   r^2 = x^2 + y^2
//! ```
//!
//! with shape parameters `a, b > 0`. Two conventions appear:
//!
//! * the *tilted* potential `V = V0 + fx x + fy y`, used by the
//!   critical-point theory (`critical_points_static`), and
//! * the *driven* potential `V_t = V0 - (Fx x + Fy y) cos Ωt`, which is what
//!   the SDE descends ([`evaluate_field`], [`critical_points`]).
//!
//! The two are linked by `fx = -Fx cos Ωt`, `fy = -Fy cos Ωt`.
//!
//! For axis-aligned tilts the critical points have closed trigonometric
//! forms (roots of a depressed cubic); for a general direction they are the
//! real roots of a degree-5 polynomial in `y`, recovered to `x` through the
//! gradient equations and Newton-polished on the full gradient system to a
//! residual of 1e-9.

use alloc::vec::Vec;

#[allow(unused_imports)] // used by the no_std build
use num_traits::Float;

use crate::vec2::Vec2;

const GRAD_RESIDUAL_TOL: f64 = 1e-9;
const DEGENERATE_DET_TOL: f64 = 1e-10;

/// Shape parameters of the potential, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64) -> Self {
        assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
        ModelParams { a, b }
    }
}

/// Periodic forcing of magnitude `f` at angle `phi_deg` (degrees, [0, 360))
/// with angular frequency `omega`. Components are always derived, never
/// stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    pub f: f64,
    pub phi_deg: f64,
    pub omega: f64,
}

impl Forcing {
    pub fn new(f: f64, phi_deg: f64, omega: f64) -> Self {
        assert!(f >= 0.0, "forcing magnitude must be nonnegative");
        assert!(omega > 0.0, "driving frequency must be positive");
        Forcing { f, phi_deg, omega }
    }

    pub fn fx(&self) -> f64 {
        self.f * self.phi_deg.to_radians().cos()
    }

    pub fn fy(&self) -> f64 {
        self.f * self.phi_deg.to_radians().sin()
    }

    /// Driving period T = 2π/Ω.
    pub fn period(&self) -> f64 {
        2.0 * core::f64::consts::PI / self.omega
    }

    /// Instantaneous tilt components of the driven potential at time `t`,
    /// i.e. the `(fx, fy)` such that `V_t = V0 + fx x + fy y`.
    pub fn tilt_at(&self, t: f64) -> (f64, f64) {
        let c = -(self.omega * t).cos();
        (self.fx() * c, self.fy() * c)
    }
}

/// Nature of a critical point. `Unidentified` marks degenerate Hessians
/// (forcing exactly at a collision threshold).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Well,
    Hill,
    Saddle,
    Unidentified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub position: Vec2,
    pub kind: PointKind,
}

/// Symmetric 2x2 Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Hessian {
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues, smaller first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.xx + self.yy;
        let d = ((self.xx - self.yy) * 0.5).hypot(self.xy);
        (0.5 * tr - d, 0.5 * tr + d)
    }
}

/// Potential value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy)]
pub struct Field {
    pub value: f64,
    pub grad: Vec2,
    pub hessian: Hessian,
}

/// The five forcing thresholds at which critical points collide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalForces {
    pub fx_crit: f64,
    pub fx_sad: f64,
    pub fy_crit: f64,
    pub fy_sad: f64,
    pub f_crit: f64,
}

/// Errors from the critical-point machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialError {
    /// A numeric root could not be polished to the 1e-9 gradient residual;
    /// the caller should fall back to the analytic axis branch.
    RootFindingUnstable,
    /// Point tracking between adjacent phases of a table could not match
    /// points within tolerance (quintic instability near axis angles).
    DiscontinuousBranch { entry: usize },
    /// A phase table does not contain exactly one left and one right well.
    TopologyChanged { entry: usize },
}

impl core::fmt::Display for PotentialError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PotentialError::RootFindingUnstable => {
                write!(f, "root polishing exceeded the 1e-9 gradient residual")
            }
            PotentialError::DiscontinuousBranch { entry } => {
                write!(f, "critical-point tracking lost continuity at table entry {entry}")
            }
            PotentialError::TopologyChanged { entry } => {
                write!(f, "phase table entry {entry} lacks a left/right well pair")
            }
        }
    }
}

impl core::error::Error for PotentialError {}

/// V0 and the tilt term, with gradient and Hessian, for the tilted
/// convention `V = V0 + fx x + fy y`.
pub fn static_field(params: ModelParams, fx: f64, fy: f64, point: Vec2) -> Field {
    let (a, b) = (params.a, params.b);
    let (x, y) = (point.x, point.y);
    let r2 = x * x + y * y;
    let value = 0.25 * r2 * r2 - 0.5 * r2 - a * x * x + b * y * y + fx * x + fy * y;
    let grad = Vec2::new(x * (r2 - 1.0 - 2.0 * a) + fx, y * (r2 - 1.0 + 2.0 * b) + fy);
    let hessian = Hessian {
        xx: 3.0 * x * x + y * y - 1.0 - 2.0 * a,
        xy: 2.0 * x * y,
        yy: x * x + 3.0 * y * y - 1.0 + 2.0 * b,
    };
    Field { value, grad, hessian }
}

/// V_t, its gradient and Hessian at `(point, t)` for the driven potential
/// `V_t = V0 - (Fx x + Fy y) cos Ωt`. The Hessian is forcing-independent.
pub fn evaluate_field(params: ModelParams, forcing: &Forcing, point: Vec2, t: f64) -> Field {
    let (fx, fy) = forcing.tilt_at(t);
    static_field(params, fx, fy, point)
}

/// Drift of the SDE at `(point, t)`: `-∇V_t`.
pub fn drift(params: ModelParams, forcing: &Forcing, point: Vec2, t: f64) -> Vec2 {
    let (a, b) = (params.a, params.b);
    let r2 = point.x * point.x + point.y * point.y;
    let c = (forcing.omega * t).cos();
    Vec2::new(
        -point.x * (r2 - 1.0 - 2.0 * a) + forcing.fx() * c,
        -point.y * (r2 - 1.0 + 2.0 * b) + forcing.fy() * c,
    )
}

/// The five collision thresholds. `fy_crit` is defined as 0 once the
/// argument `1 - 2b` is nonpositive.
pub fn critical_forces(params: ModelParams) -> CriticalForces {
    let (a, b) = (params.a, params.b);
    let fx_crit = (4.0 * (1.0 + 2.0 * a).powi(3) / 27.0).sqrt();
    let fx_sad = 2.0 * (a + b) * (1.0 - 2.0 * b).max(0.0).sqrt();
    let fy_crit = if b >= 0.5 {
        0.0
    } else {
        (4.0 * (1.0 - 2.0 * b).powi(3) / 27.0).sqrt()
    };
    let fy_sad = 2.0 * (a + b) * (1.0 + 2.0 * a).sqrt();
    let f_crit = fx_crit.min(fx_sad).min(fy_crit).min(fy_sad);
    CriticalForces { fx_crit, fx_sad, fy_crit, fy_sad, f_crit }
}

// Real roots of the depressed cubic x^3 - c x + f = 0, ascending. For
// c > 0 and 27 f^2 < 4 c^3 the trigonometric closed form gives three
// roots; otherwise the single real root comes from the hyperbolic branch.
fn depressed_cubic_roots(c: f64, f: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    if f == 0.0 {
        roots.push(0.0);
        if c > 0.0 {
            roots.push(c.sqrt());
            roots.push(-c.sqrt());
        }
    } else if c > 0.0 {
        let mut disc = 4.0 * c.powi(3) - 27.0 * f * f;
        if disc < 0.0 && disc > -1e-12 * 4.0 * c.powi(3) {
            disc = 0.0; // rounding at the double-root threshold
        }
        let scale = 2.0 * (c / 3.0).sqrt();
        if disc >= 0.0 {
            // Paper-style trig parametrisation; arctan argument is the
            // square root of the discriminant.
            let theta = (disc.sqrt() / (f.abs() * 27.0f64.sqrt())).atan();
            let sign = if f > 0.0 { 1.0 } else { -1.0 };
            for k in 0..3 {
                let angle = theta / 3.0 + 2.0 * core::f64::consts::PI * k as f64 / 3.0;
                roots.push(-sign * scale * angle.cos());
            }
        } else {
            let arg = 3.0 * f.abs() / (2.0 * c) * (3.0 / c).sqrt();
            let gamma = arg.acosh() / 3.0;
            roots.push(-f.signum() * scale * gamma.cosh());
        }
    } else if c == 0.0 {
        roots.push(-f.cbrt());
    } else {
        // c < 0: monotone cubic, single real root (hyperbolic sine branch).
        let p = -c; // x^3 + p x + f with p > 0
        let scale = 2.0 * (p / 3.0).sqrt();
        let arg = 3.0 * f / (2.0 * p) * (3.0 / p).sqrt();
        roots.push(-scale * (arg.asinh() / 3.0).sinh());
    }
    roots.sort_unstable_by(|l, r| l.partial_cmp(r).unwrap());
    roots.dedup_by(|l, r| (*l - *r).abs() < 1e-12);
    roots
}

// Newton iteration on the gradient system. Returns the polished point and
// its residual (max-abs gradient component).
fn newton_polish(params: ModelParams, fx: f64, fy: f64, mut p: Vec2) -> (Vec2, f64) {
    let mut best = p;
    let mut best_res = f64::INFINITY;
    for _ in 0..60 {
        let f = static_field(params, fx, fy, p);
        let res = f.grad.x.abs().max(f.grad.y.abs());
        if res < best_res {
            best = p;
            best_res = res;
        }
        if res < 1e-13 {
            break;
        }
        let det = f.hessian.det();
        if det.abs() < 1e-300 || !det.is_finite() {
            break;
        }
        let dx = (f.hessian.yy * f.grad.x - f.hessian.xy * f.grad.y) / det;
        let dy = (f.hessian.xx * f.grad.y - f.hessian.xy * f.grad.x) / det;
        p = Vec2::new(p.x - dx, p.y - dy);
        if !p.is_finite() {
            break;
        }
    }
    (best, best_res)
}

fn classify(params: ModelParams, point: Vec2) -> PointKind {
    let h = static_field(params, 0.0, 0.0, point).hessian;
    let det = h.det();
    if det.abs() < DEGENERATE_DET_TOL {
        PointKind::Unidentified
    } else if det < 0.0 {
        PointKind::Saddle
    } else if h.xx > 0.0 {
        PointKind::Well
    } else {
        PointKind::Hill
    }
}

// Durand-Kerner iteration for all complex roots of a real quintic
// c[5] y^5 + ... + c[0], coefficients ascending.
fn quintic_roots(c: &[f64; 6]) -> [num_complex::Complex64; 5] {
    use num_complex::Complex64;
    let lead = c[5];
    let mut a = [0.0f64; 5];
    for i in 0..5 {
        a[i] = c[i] / lead;
    }
    let eval = |z: Complex64| -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for i in (0..5).rev() {
            v = v * z + a[i];
        }
        v
    };
    // Cauchy bound for the initial circle radius.
    let radius = 1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut z = [Complex64::new(0.0, 0.0); 5];
    for (k, zk) in z.iter_mut().enumerate() {
        let ang = 2.0 * core::f64::consts::PI * k as f64 / 5.0 + 0.4;
        *zk = Complex64::new(radius * ang.cos(), radius * ang.sin());
    }
    for _ in 0..300 {
        let mut max_step = 0.0f64;
        for i in 0..5 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..5 {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm_sqr() == 0.0 {
                continue;
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius {
            break;
        }
    }
    z
}

/// Critical points of the tilted potential `V0 + fx x + fy y`, geometrically
/// distinct (collided points are merged) and classified by the Hessian sign
/// conditions; degenerate Hessians are `Unidentified`.
///
/// Near-axis tilts (`|fx fy| / |f| < 1e-6`) are routed to the analytic
/// axis solver; otherwise the degree-5 polynomial path is used and every
/// root is Newton-polished to a gradient residual of 1e-9.
pub fn critical_points_static(
    params: ModelParams,
    fx: f64,
    fy: f64,
) -> Result<Vec<CriticalPoint>, PotentialError> {
    let fmag = (fx * fx + fy * fy).sqrt();
    let near_axis = fmag == 0.0 || (fx * fy).abs() / fmag < 1e-6;
    // Near-axis tilts are routed to the closed forms with the negligible
    // component dropped; the quintic is unstable there.
    let (efx, efy) = if !near_axis {
        (fx, fy)
    } else if fx.abs() >= fy.abs() {
        (fx, 0.0)
    } else {
        (0.0, fy)
    };

    let mut candidates: Vec<Vec2> = Vec::new();
    if near_axis {
        axis_candidates(params, efx, efy, &mut candidates);
    } else {
        quintic_candidates(params, efx, efy, &mut candidates)?;
    }
    let mut points: Vec<CriticalPoint> = Vec::new();
    for cand in candidates {
        let (p, res) = newton_polish(params, efx, efy, cand);
        if res > GRAD_RESIDUAL_TOL {
            return Err(PotentialError::RootFindingUnstable);
        }
        if points.iter().any(|q| q.position.dist(p) < 1e-8) {
            continue;
        }
        points.push(CriticalPoint { position: p, kind: classify(params, p) });
    }
    points.sort_unstable_by(|l, r| {
        (l.position.x, l.position.y)
            .partial_cmp(&(r.position.x, r.position.y))
            .unwrap()
    });
    Ok(points)
}

// Candidates for an axis-aligned tilt (exactly one of ax, ay nonzero, or
// neither). Closed cubic/trig solutions plus the off-axis families.
fn axis_candidates(params: ModelParams, ax: f64, ay: f64, out: &mut Vec<Vec2>) {
    let (a, b) = (params.a, params.b);
    if ay == 0.0 {
        // x-axis roots of x^3 - (1+2a)x + ax = 0.
        for x in depressed_cubic_roots(1.0 + 2.0 * a, ax) {
            out.push(Vec2::new(x, 0.0));
        }
        // Off-axis saddle pair on the circle r^2 = 1 - 2b.
        if b < 0.5 {
            let xs = ax / (2.0 * (a + b));
            let ys2 = (1.0 - 2.0 * b) - xs * xs;
            if ys2 > 1e-14 {
                let ys = ys2.sqrt();
                out.push(Vec2::new(xs, ys));
                out.push(Vec2::new(xs, -ys));
            } else if ys2 > -1e-12 {
                out.push(Vec2::new(xs, 0.0)); // collision with an axis root
            }
        }
        if ax != 0.0 {
            return;
        }
        // Unforced: also the y-axis saddles (handled below with ay = 0).
    }
    // y-axis roots of y^3 - (1-2b)y + ay = 0 (single root when b >= 1/2).
    if !(ay == 0.0 && b >= 0.5) {
        for y in depressed_cubic_roots(1.0 - 2.0 * b, ay) {
            if ay == 0.0 && y == 0.0 {
                continue; // origin already produced by the x-axis cubic
            }
            out.push(Vec2::new(0.0, y));
        }
    }
    if ay != 0.0 {
        // Off-axis well pair on the circle r^2 = 1 + 2a.
        let yw = -ay / (2.0 * (a + b));
        let xw2 = (1.0 + 2.0 * a) - yw * yw;
        if xw2 > 1e-14 {
            let xw = xw2.sqrt();
            out.push(Vec2::new(xw, yw));
            out.push(Vec2::new(-xw, yw));
        } else if xw2 > -1e-12 {
            out.push(Vec2::new(0.0, yw));
        }
    }
}

// General-angle candidates from the degree-5 polynomial in y.
fn quintic_candidates(
    params: ModelParams,
    fx: f64,
    fy: f64,
    out: &mut Vec<Vec2>,
) -> Result<(), PotentialError> {
    let (a, b) = (params.a, params.b);
    let s = a + b;
    let c = [
        -fy * fy * fy,
        (1.0 - 2.0 * b) * fy * fy - 4.0 * s * fy * fy,
        (1.0 - 2.0 * b) * 4.0 * s * fy - 4.0 * s * s * fy,
        (1.0 - 2.0 * b) * 4.0 * s * s - fy * fy - fx * fx,
        -4.0 * s * fy,
        -4.0 * s * s,
    ];
    let roots = quintic_roots(&c);
    let scale = roots.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    for z in roots {
        if z.im.abs() > 1e-7 * scale.max(1.0) {
            continue; // complex pair: the point does not exist
        }
        let y = z.re;
        if y == 0.0 {
            continue;
        }
        let denom = (1.0 - 2.0 * b) - fy / y - (1.0 + 2.0 * a);
        if denom.abs() < 1e-12 {
            continue;
        }
        let x = -fx / denom;
        out.push(Vec2::new(x, y));
    }
    Ok(())
}

/// Critical points of the driven potential `V_t` at time `t`.
pub fn critical_points(
    params: ModelParams,
    forcing: &Forcing,
    t: f64,
) -> Result<Vec<CriticalPoint>, PotentialError> {
    let (fx, fy) = forcing.tilt_at(t);
    critical_points_static(params, fx, fy)
}

/// Table of critical points over one driving period, indexed by the phase
/// `u = mod(Ωt, 2π)` with step `u_step` (the "pseudo parameter" grid:
/// `Ω = 1`, `t = u`).
#[derive(Debug, Clone)]
pub struct CriticalTable {
    pub u_step: f64,
    pub entries: Vec<Vec<CriticalPoint>>,
}

impl CriticalTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry index for a phase `u` (radians, any real value).
    pub fn index_of(&self, u: f64) -> usize {
        let tau = 2.0 * core::f64::consts::PI;
        let mut w = u % tau;
        if w < 0.0 {
            w += tau;
        }
        let i = (w / self.u_step).round() as usize;
        i % self.entries.len()
    }

    pub fn at_phase(&self, u: f64) -> &[CriticalPoint] {
        &self.entries[self.index_of(u)]
    }
}

/// Build the phase table of critical points. Adjacent entries are matched
/// by nearest neighbour with kind preserved; a match further than the
/// continuity tolerance reports `DiscontinuousBranch`.
pub fn critical_table(
    params: ModelParams,
    forcing: &Forcing,
    u_step: f64,
) -> Result<CriticalTable, PotentialError> {
    assert!(u_step > 0.0);
    let tau = 2.0 * core::f64::consts::PI;
    let n = (tau / u_step).ceil() as usize;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let u = i as f64 * u_step;
        let c = -u.cos();
        entries.push(critical_points_static(params, forcing.fx() * c, forcing.fy() * c)?);
    }

    // Continuity guard: track each point to the next entry; a jump an order
    // of magnitude beyond the typical per-step motion marks a lost branch.
    let mut max_step = 0.0f64;
    let mut displacements = Vec::new();
    for i in 0..n {
        let next = &entries[(i + 1) % n];
        for p in &entries[i] {
            let best = next
                .iter()
                .filter(|q| q.kind == p.kind)
                .map(|q| q.position.dist(p.position))
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                displacements.push(best);
                max_step = max_step.max(best);
            }
        }
    }
    displacements.sort_unstable_by(|l, r| l.partial_cmp(r).unwrap());
    let median = displacements.get(displacements.len() / 2).copied().unwrap_or(0.0);
    let tol = (100.0 * median).max(1e-3);
    if max_step > tol {
        let entry = 0; // located below for the report
        for i in 0..n {
            let next = &entries[(i + 1) % n];
            for p in &entries[i] {
                let best = next
                    .iter()
                    .filter(|q| q.kind == p.kind)
                    .map(|q| q.position.dist(p.position))
                    .fold(f64::INFINITY, f64::min);
                if best.is_finite() && best > tol {
                    return Err(PotentialError::DiscontinuousBranch { entry: i });
                }
            }
        }
        return Err(PotentialError::DiscontinuousBranch { entry });
    }
    Ok(CriticalTable { u_step, entries })
}

/// Left/right well positions over one period, indexed by phase, for the
/// chain reduction and the adiabatic rate machinery.
#[derive(Debug, Clone)]
pub struct WellTable {
    pub u_step: f64,
    pub omega: f64,
    pub left: Vec<Vec2>,
    pub right: Vec<Vec2>,
}

impl WellTable {
    /// Extract the two wells (left: x < 0) from every entry of a table.
    pub fn from_table(table: &CriticalTable, omega: f64) -> Result<Self, PotentialError> {
        let mut left = Vec::with_capacity(table.len());
        let mut right = Vec::with_capacity(table.len());
        for (i, entry) in table.entries.iter().enumerate() {
            let wells: Vec<Vec2> = entry
                .iter()
                .filter(|p| p.kind == PointKind::Well)
                .map(|p| p.position)
                .collect();
            if wells.len() != 2 || !(wells[0].x * wells[1].x < 0.0) {
                return Err(PotentialError::TopologyChanged { entry: i });
            }
            if wells[0].x < 0.0 {
                left.push(wells[0]);
                right.push(wells[1]);
            } else {
                left.push(wells[1]);
                right.push(wells[0]);
            }
        }
        Ok(WellTable { u_step: table.u_step, omega, left, right })
    }

    fn index_at(&self, t: f64) -> usize {
        let tau = 2.0 * core::f64::consts::PI;
        let mut u = (self.omega * t) % tau;
        if u < 0.0 {
            u += tau;
        }
        ((u / self.u_step).round() as usize) % self.left.len()
    }

    pub fn left_at(&self, t: f64) -> Vec2 {
        self.left[self.index_at(t)]
    }

    pub fn right_at(&self, t: f64) -> Vec2 {
        self.right[self.index_at(t)]
    }

    /// Smallest distance between the two wells over the period.
    pub fn min_separation(&self) -> f64 {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| l.dist(*r))
            .fold(f64::INFINITY, f64::min)
    }
}
