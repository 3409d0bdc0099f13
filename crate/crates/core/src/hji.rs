//! Single-mode Hamilton-Jacobi-Isaacs machinery: optimal input selection,
//! the Lax-Friedrichs numerical Hamiltonian, the CFL timestep and the
//! explicit Euler step of the variational inequality with target clamp.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{upwind_derivatives_into, GridSpec, ValueField, MAX_DIM};
use crate::model::{Mode, MAX_INPUTS};

const CHUNK: usize = 4096;

/// Which player drives the value down.
///
/// `Reach`: the controller minimizes and the disturbance maximizes.
/// `Avoid`: roles swapped, the controller keeps the value high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameRole {
    Reach,
    Avoid,
}

impl GameRole {
    pub fn control_minimizes(self) -> bool {
        self == GameRole::Reach
    }

    /// The better of two values from the controller's point of view.
    #[inline]
    pub fn control_pick(self, a: f64, b: f64) -> f64 {
        match self {
            GameRole::Reach => a.min(b),
            GameRole::Avoid => a.max(b),
        }
    }

    /// Whether `a` is strictly better than `b` for the controller.
    #[inline]
    pub fn control_prefers(self, a: f64, b: f64) -> bool {
        match self {
            GameRole::Reach => a < b,
            GameRole::Avoid => a > b,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GameRole::Reach => "reach",
            GameRole::Avoid => "avoid",
        }
    }
}

impl std::str::FromStr for GameRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reach" => Ok(GameRole::Reach),
            "avoid" => Ok(GameRole::Avoid),
            other => Err(Error::usage(format!("unknown role {other:?} (expected reach or avoid)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalInputs {
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    /// `p · f(x, u*, d*)`.
    pub hdot: f64,
}

/// Inputs attaining the Hamiltonian's inner optimization at costate `p`.
pub fn optimal_inputs(mode: &Mode, x: &[f64], p: &[f64], role: GameRole) -> Result<OptimalInputs> {
    let mut u = vec![0.0; mode.control_box().dim()];
    let mut d = vec![0.0; mode.disturbance_box().dim()];
    let hdot = optimal_inputs_into(mode, x, p, role, &mut u, &mut d)?;
    Ok(OptimalInputs { u, d, hdot })
}

/// Pick the upper box edge iff it is strictly better for a player whose
/// objective is given by `minimize`; zero coefficients go to the lower edge.
#[inline]
fn bang_bang(coef: f64, lo: f64, hi: f64, minimize: bool) -> f64 {
    let upper = if minimize { coef < 0.0 } else { coef > 0.0 };
    if upper {
        hi
    } else {
        lo
    }
}

pub(crate) fn optimal_inputs_into(
    mode: &Mode,
    x: &[f64],
    p: &[f64],
    role: GameRole,
    u: &mut [f64],
    d: &mut [f64],
) -> Result<f64> {
    let n = mode.dim();
    let ubox = mode.control_box();
    let dbox = mode.disturbance_box();
    let (mu, md) = (ubox.dim(), dbox.dim());
    let control_min = role.control_minimizes();

    if let Some(parts) = mode.affine_parts(x) {
        let mut hdot = 0.0;
        for k in 0..n {
            hdot += p[k] * parts.drift[k];
        }
        for j in 0..mu {
            let coef: f64 = (0..n).map(|k| p[k] * parts.control[k * mu + j]).sum();
            u[j] = bang_bang(coef, ubox.lo()[j], ubox.hi()[j], control_min);
            hdot += coef * u[j];
        }
        for j in 0..md {
            let coef: f64 = (0..n).map(|k| p[k] * parts.disturbance[k * md + j]).sum();
            d[j] = bang_bang(coef, dbox.lo()[j], dbox.hi()[j], !control_min);
            hdot += coef * d[j];
        }
        if !hdot.is_finite() {
            return Err(Error::NumericalDomain { mode: mode.id(), x: x.to_vec() });
        }
        return Ok(hdot);
    }

    // Corner sampling. The inner player answers each outer choice: for Reach
    // the disturbance is outer (max over d of min over u), for Avoid the
    // controller is outer (max over u of min over d).
    let mut f = [0.0; MAX_DIM];
    let mut cu = [0.0; MAX_INPUTS];
    let mut cd = [0.0; MAX_INPUTS];
    let mut eval = |um: usize, dm: usize, cu: &mut [f64], cd: &mut [f64]| -> Result<f64> {
        ubox.corner(um, cu);
        dbox.corner(dm, cd);
        mode.eval(x, &cu[..mu], &cd[..md], &mut f[..n]);
        let h: f64 = (0..n).map(|k| p[k] * f[k]).sum();
        if h.is_finite() {
            Ok(h)
        } else {
            Err(Error::NumericalDomain { mode: mode.id(), x: x.to_vec() })
        }
    };
    let (outer_n, inner_n) = if control_min {
        (dbox.corner_count(), ubox.corner_count())
    } else {
        (ubox.corner_count(), dbox.corner_count())
    };
    let mut best_outer = (f64::NEG_INFINITY, 0usize, 0usize);
    for o in 0..outer_n {
        let mut best_inner = (f64::INFINITY, 0usize);
        for i in 0..inner_n {
            let (um, dm) = if control_min { (i, o) } else { (o, i) };
            let h = eval(um, dm, &mut cu, &mut cd)?;
            if h < best_inner.0 {
                best_inner = (h, i);
            }
        }
        if best_inner.0 > best_outer.0 {
            best_outer = (best_inner.0, o, best_inner.1);
        }
    }
    let (um, dm) = if control_min {
        (best_outer.2, best_outer.1)
    } else {
        (best_outer.1, best_outer.2)
    };
    ubox.corner(um, u);
    dbox.corner(dm, d);
    Ok(best_outer.0)
}

/// Grid-wide bound on `|f_k|` for one mode: the Lax-Friedrichs `α`.
pub fn dissipation_bounds(mode: &Mode, grid: &GridSpec) -> Vec<f64> {
    let dim = grid.dim();
    let chunks = grid.len().div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0.0f64; MAX_DIM];
            let mut x = [0.0; MAX_DIM];
            let mut s = [0.0; MAX_DIM];
            for flat in c * CHUNK..((c + 1) * CHUNK).min(grid.len()) {
                grid.node_coords(flat, &mut x);
                mode.speed_bounds(&x[..dim], &mut s[..dim]);
                for k in 0..dim {
                    acc[k] = acc[k].max(s[k]);
                }
            }
            acc
        })
        .reduce(
            || [0.0; MAX_DIM],
            |mut a, b| {
                for k in 0..MAX_DIM {
                    a[k] = a[k].max(b[k]);
                }
                a
            },
        )[..dim]
        .to_vec()
}

/// Buffers for one explicit step: one-sided derivative fields per dimension
/// and the mode's dissipation coefficients.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    scratch: Vec<f64>,
}

impl StepWorkspace {
    pub fn new(grid: &GridSpec, alpha: Vec<f64>) -> Self {
        let dim = grid.dim();
        assert_eq!(alpha.len(), dim);
        Self {
            left: vec![vec![0.0; grid.len()]; dim],
            right: vec![vec![0.0; grid.len()]; dim],
            alpha,
            scratch: vec![0.0; grid.len()],
        }
    }

    pub fn for_mode(grid: &GridSpec, mode: &Mode) -> Self {
        Self::new(grid, dissipation_bounds(mode, grid))
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn set_alpha(&mut self, alpha: Vec<f64>) {
        assert_eq!(alpha.len(), self.alpha.len());
        self.alpha = alpha;
    }

    /// Recomputes the derivative fields for `data`.
    pub fn load(&mut self, grid: &GridSpec, data: &[f64]) {
        for k in 0..grid.dim() {
            upwind_derivatives_into(grid, data, k, &mut self.left[k], &mut self.right[k]);
        }
    }

    pub fn left(&self, k: usize) -> &[f64] {
        &self.left[k]
    }

    pub fn right(&self, k: usize) -> &[f64] {
        &self.right[k]
    }

    /// `Σ_k α_k / dx_k`.
    pub fn cfl_rate(&self, grid: &GridSpec) -> f64 {
        self.alpha.iter().zip(grid.spacing()).map(|(a, dx)| a / dx).sum()
    }
}

/// Numerical Hamiltonian from the derivative fields already loaded in `ws`.
///
/// `Ĥ = p̄ · f(x, u*, d*) + Σ_k α_k (D⁺_k − D⁻_k) / 2` with `p̄ = (D⁻ + D⁺) / 2`.
/// The dissipation enters with a plus sign because the field is marched
/// backward in time as `V ← V + δ Ĥ`.
pub fn lax_friedrichs_into(grid: &GridSpec, mode: &Mode, role: GameRole, ws: &StepWorkspace, out: &mut [f64]) -> Result<()> {
    let dim = grid.dim();
    let mu = mode.control_box().dim();
    let md = mode.disturbance_box().dim();
    out.par_chunks_mut(CHUNK).enumerate().try_for_each(|(c, chunk)| {
        let start = c * CHUNK;
        let mut x = [0.0; MAX_DIM];
        let mut p = [0.0; MAX_DIM];
        let mut u = [0.0; MAX_INPUTS];
        let mut d = [0.0; MAX_INPUTS];
        for (off, slot) in chunk.iter_mut().enumerate() {
            let flat = start + off;
            grid.node_coords(flat, &mut x);
            let mut diss = 0.0;
            for k in 0..dim {
                let (l, r) = (ws.left[k][flat], ws.right[k][flat]);
                p[k] = 0.5 * (l + r);
                diss += ws.alpha[k] * 0.5 * (r - l);
            }
            let h = optimal_inputs_into(mode, &x[..dim], &p[..dim], role, &mut u[..mu], &mut d[..md])?;
            *slot = h + diss;
        }
        Ok(())
    })
}

pub fn lax_friedrichs_hamiltonian(field: &ValueField, mode: &Mode, role: GameRole, ws: &mut StepWorkspace) -> Result<ValueField> {
    let grid = field.grid();
    ws.load(grid, field.data());
    let mut out = vec![0.0; grid.len()];
    lax_friedrichs_into(grid, mode, role, ws, &mut out)?;
    ValueField::new(field.grid_arc().clone(), out)
}

/// Largest stable explicit step `c / max_modes Σ_k α_k / dx_k`; `cap` when
/// every mode is static.
pub fn cfl_timestep(alphas: &[Vec<f64>], grid: &GridSpec, c: f64, cap: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::usage(format!("CFL factor must lie in (0, 1], got {c}")));
    }
    let rate = alphas
        .iter()
        .map(|a| a.iter().zip(grid.spacing()).map(|(a, dx)| a / dx).sum::<f64>())
        .fold(0.0, f64::max);
    if rate > 0.0 {
        Ok(c / rate)
    } else {
        Ok(cap)
    }
}

/// `out = min(V + δ Ĥ(V), l)` for every node.
pub(crate) fn vi_euler_step_into(
    grid: &GridSpec,
    v: &[f64],
    mode: &Mode,
    role: GameRole,
    target: &[f64],
    dt: f64,
    ws: &mut StepWorkspace,
    out: &mut [f64],
) -> Result<()> {
    let rate = ws.cfl_rate(grid);
    if dt * rate > 1.0 + 1e-12 {
        return Err(Error::Cfl { dt, bound: 1.0 / rate });
    }
    ws.load(grid, v);
    let mut ham = std::mem::take(&mut ws.scratch);
    let res = lax_friedrichs_into(grid, mode, role, ws, &mut ham);
    if res.is_ok() {
        out.par_iter_mut()
            .zip(v.par_iter().zip(ham.par_iter().zip(target.par_iter())))
            .for_each(|(o, (vi, (h, l)))| *o = (vi + dt * h).min(*l));
    }
    ws.scratch = ham;
    res
}

pub fn vi_euler_step(
    v: &ValueField,
    mode: &Mode,
    role: GameRole,
    target: &ValueField,
    dt: f64,
    ws: &mut StepWorkspace,
) -> Result<ValueField> {
    let grid: &Arc<GridSpec> = v.grid_arc();
    let mut out = vec![0.0; grid.len()];
    vi_euler_step_into(grid, v.data(), mode, role, target.data(), dt, ws, &mut out)?;
    ValueField::new(grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dynamics, InputBox};
    use proptest::prelude::*;

    fn walker() -> Mode {
        Mode::new(
            "walk",
            1,
            Dynamics::affine(|_, f| f[0] = 0.0, |_, b| b[0] = 3.0, |_, _| {}),
            InputBox::new(vec![0.0], vec![1.0]).unwrap(),
            InputBox::empty(),
        )
    }

    fn unit_speed() -> Mode {
        Mode::new(
            "unit",
            1,
            Dynamics::affine(|_, f| f[0] = 0.0, |_, b| b[0] = 1.0, |_, _| {}),
            InputBox::new(vec![-1.0], vec![1.0]).unwrap(),
            InputBox::empty(),
        )
    }

    fn line(lo: f64, hi: f64, n: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::uniform(vec![lo], vec![hi], vec![n]).unwrap())
    }

    #[test]
    fn bang_bang_examples() {
        let m = walker();
        let r = optimal_inputs(&m, &[1.0], &[-1.0], GameRole::Reach).unwrap();
        assert_eq!((r.u[0], r.hdot), (1.0, -3.0));
        let r = optimal_inputs(&m, &[1.0], &[1.0], GameRole::Reach).unwrap();
        assert_eq!((r.u[0], r.hdot), (0.0, 0.0));
        let r = optimal_inputs(&m, &[1.0], &[0.0], GameRole::Avoid).unwrap();
        assert_eq!((r.u[0], r.hdot), (0.0, 0.0));
    }

    #[test]
    fn general_dynamics_fall_back_to_corners() {
        // f = u*d with u, d in [-1, 1]: reach value max_d min_u p*u*d = -|p|
        let m = Mode::new(
            "bilinear",
            1,
            Dynamics::General(Arc::new(|_, u, d, f| f[0] = u[0] * d[0])),
            InputBox::new(vec![-1.0], vec![1.0]).unwrap(),
            InputBox::new(vec![-1.0], vec![1.0]).unwrap(),
        );
        let r = optimal_inputs(&m, &[0.0], &[2.0], GameRole::Reach).unwrap();
        assert_eq!(r.hdot, -2.0);
        let a = optimal_inputs(&m, &[0.0], &[2.0], GameRole::Avoid).unwrap();
        assert_eq!(a.hdot, -2.0);
    }

    #[test]
    fn non_finite_dynamics_are_reported() {
        let m = Mode::new(
            "blowup",
            1,
            Dynamics::affine(|x, f| f[0] = 1.0 / x[0], |_, _| {}, |_, _| {}),
            InputBox::empty(),
            InputBox::empty(),
        );
        let err = optimal_inputs(&m, &[0.0], &[1.0], GameRole::Reach).unwrap_err();
        assert!(matches!(err, Error::NumericalDomain { mode: 0, .. }));
    }

    #[test]
    fn lax_friedrichs_examples() {
        let g = line(0.0, 10.0, 301);
        let m = walker();
        let mut ws = StepWorkspace::for_mode(&g, &m);
        assert_eq!(ws.alpha(), &[3.0]);

        let c = ValueField::constant(g.clone(), 2.0);
        let h = lax_friedrichs_hamiltonian(&c, &m, GameRole::Reach, &mut ws).unwrap();
        assert!(h.data().iter().all(|&v| v == 0.0));

        let up = ValueField::from_fn(g.clone(), |x| x[0]);
        let h = lax_friedrichs_hamiltonian(&up, &m, GameRole::Reach, &mut ws).unwrap();
        assert!(h.data().iter().all(|&v| v.abs() < 1e-9));

        let down = ValueField::from_fn(g.clone(), |x| -x[0]);
        let h = lax_friedrichs_hamiltonian(&down, &m, GameRole::Reach, &mut ws).unwrap();
        assert!(h.data().iter().all(|&v| (v + 3.0).abs() < 1e-9));
    }

    #[test]
    fn cfl_examples() {
        let g = line(0.0, 10.0, 301);
        let dt = cfl_timestep(&[vec![3.0], vec![1.0], vec![0.0]], &g, 0.8, 1.0).unwrap();
        assert!((dt - 0.8 * (10.0 / 300.0) / 3.0).abs() < 1e-15);
        assert!((dt - 8.89e-3).abs() < 1e-5);

        let fine = line(0.0, 10.0, 601);
        let dt2 = cfl_timestep(&[vec![3.0]], &fine, 0.8, 1.0).unwrap();
        assert!((dt2 - dt / 2.0).abs() < 1e-15);

        assert_eq!(cfl_timestep(&[vec![0.0]], &g, 0.8, 0.1).unwrap(), 0.1);
        assert!(cfl_timestep(&[vec![1.0]], &g, 1.5, 0.1).is_err());
    }

    #[test]
    fn static_dynamics_keep_the_target() {
        let g = line(-2.0, 2.0, 41);
        let m = Mode::new("rest", 1, Dynamics::zero(), InputBox::empty(), InputBox::empty());
        let l = ValueField::from_fn(g.clone(), |x| x[0].abs() - 0.5);
        let mut ws = StepWorkspace::for_mode(&g, &m);
        let v = vi_euler_step(&l, &m, GameRole::Reach, &l, 0.1, &mut ws).unwrap();
        assert_eq!(v, l);
    }

    #[test]
    fn rejects_cfl_violation() {
        let g = line(-2.0, 2.0, 41);
        let m = unit_speed();
        let l = ValueField::from_fn(g.clone(), |x| x[0].abs() - 0.5);
        let mut ws = StepWorkspace::for_mode(&g, &m);
        let err = vi_euler_step(&l, &m, GameRole::Reach, &l, 0.2, &mut ws).unwrap_err();
        assert!(matches!(err, Error::Cfl { bound, .. } if (bound - 0.1).abs() < 1e-12));
    }

    fn zero_crossing_right(g: &GridSpec, v: &[f64]) -> f64 {
        // first sign change scanning from the centre to the right
        let mid = v.len() / 2;
        for i in mid..v.len() - 1 {
            if v[i] <= 0.0 && v[i + 1] > 0.0 {
                let t = v[i] / (v[i] - v[i + 1]);
                return g.coord(0, i) + t * g.dx(0);
            }
        }
        f64::NAN
    }

    #[test]
    fn unit_speed_reach_grows_at_unit_rate() {
        let g = line(-3.0, 3.0, 121);
        let m = unit_speed();
        let l = ValueField::from_fn(g.clone(), |x| x[0].abs() - 0.5);
        let mut ws = StepWorkspace::for_mode(&g, &m);
        let dt = cfl_timestep(&[ws.alpha().to_vec()], &g, 0.8, 1.0).unwrap();
        let steps = (1.0 / dt).ceil() as usize;
        let dt = 1.0 / steps as f64;
        let mut v = l.clone();
        for _ in 0..steps {
            let next = vi_euler_step(&v, &m, GameRole::Reach, &l, dt, &mut ws).unwrap();
            // target clamp and sublevel growth
            for (i, (&a, &b)) in v.data().iter().zip(next.data()).enumerate() {
                assert!(b <= l.data()[i]);
                if a <= 0.0 {
                    assert!(b <= 0.0);
                }
            }
            v = next;
        }
        let edge = zero_crossing_right(&g, v.data());
        assert!((edge - 1.5).abs() <= 2.0 * g.dx(0), "edge {edge}");
    }

    #[test]
    fn clamp_dominates_where_target_is_lower() {
        let g = line(-2.0, 2.0, 41);
        let m = unit_speed();
        let l = ValueField::from_fn(g.clone(), |x| x[0].abs() - 0.5);
        let v = ValueField::constant(g.clone(), 10.0);
        let mut ws = StepWorkspace::for_mode(&g, &m);
        let out = vi_euler_step(&v, &m, GameRole::Reach, &l, 0.05, &mut ws).unwrap();
        assert_eq!(out, l);
    }

    fn symmetric(ubox: (f64, f64), dbox: (f64, f64)) -> Mode {
        Mode::new(
            "sym",
            1,
            Dynamics::affine(|_, f| f[0] = 0.0, |_, b| b[0] = 1.0, |_, c| c[0] = 1.0),
            InputBox::new(vec![ubox.0], vec![ubox.1]).unwrap(),
            InputBox::new(vec![dbox.0], vec![dbox.1]).unwrap(),
        )
    }

    #[test]
    fn role_duality_on_symmetric_inputs() {
        // ẋ = u + d: swapping the roles together with the boxes leaves the
        // Hamiltonian, and therefore every iterate, unchanged.
        let g = line(-3.0, 3.0, 61);
        let reach = symmetric((-1.0, 1.0), (-0.4, 0.4));
        let avoid = symmetric((-0.4, 0.4), (-1.0, 1.0));
        let l = ValueField::from_fn(g.clone(), |x| x[0].abs() - 0.5);
        let mut ws_r = StepWorkspace::for_mode(&g, &reach);
        let mut ws_a = StepWorkspace::for_mode(&g, &avoid);
        assert_eq!(ws_r.alpha(), ws_a.alpha());
        let dt = 0.5 * g.dx(0) / 1.4;
        let (mut vr, mut va) = (l.clone(), l.clone());
        for _ in 0..40 {
            vr = vi_euler_step(&vr, &reach, GameRole::Reach, &l, dt, &mut ws_r).unwrap();
            va = vi_euler_step(&va, &avoid, GameRole::Avoid, &l, dt, &mut ws_a).unwrap();
        }
        assert_eq!(vr, va);
        // and the result is mirror symmetric in x
        let n = vr.data().len();
        for i in 0..n {
            assert!((vr.data()[i] - vr.data()[n - 1 - i]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn inputs_stay_in_the_box(p0 in -5.0f64..5.0, p1 in -5.0f64..5.0, x0 in -1.0f64..1.0, avoid in any::<bool>()) {
            let m = Mode::new(
                "m",
                2,
                Dynamics::affine(
                    |x, f| { f[0] = x[1]; f[1] = 0.0; },
                    |x, b| { b[0] = 1.0; b[1] = x[0]; b[2] = 0.0; b[3] = 2.0; },
                    |_, c| { c[0] = 1.0; c[1] = -1.0; },
                ),
                InputBox::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap(),
                InputBox::new(vec![-0.5], vec![0.25]).unwrap(),
            );
            let role = if avoid { GameRole::Avoid } else { GameRole::Reach };
            let r = optimal_inputs(&m, &[x0, 0.3], &[p0, p1], role).unwrap();
            prop_assert!(m.control_box().contains(&r.u));
            prop_assert!(m.disturbance_box().contains(&r.d));
            let f = m.dynamics_at(&[x0, 0.3], &r.u, &r.d);
            prop_assert!((r.hdot - (p0 * f[0] + p1 * f[1])).abs() < 1e-12);
        }

        #[test]
        fn lax_friedrichs_is_exact_on_affine(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = Arc::new(GridSpec::uniform(vec![0.0, 0.0], vec![1.0, 1.0], vec![11, 13]).unwrap());
            let m = Mode::new(
                "rot",
                2,
                Dynamics::affine(|x, f| { f[0] = -x[1]; f[1] = x[0]; }, |_, bm| { bm[0] = 1.0; bm[1] = 0.0; }, |_, _| {}),
                InputBox::new(vec![-1.0], vec![1.0]).unwrap(),
                InputBox::empty(),
            );
            let v = ValueField::from_fn(g.clone(), |x| a * x[0] + b * x[1]);
            let mut ws = StepWorkspace::for_mode(&g, &m);
            let h = lax_friedrichs_hamiltonian(&v, &m, GameRole::Reach, &mut ws).unwrap();
            let mut x = [0.0; 2];
            for (i, &hv) in h.data().iter().enumerate() {
                g.node_coords(i, &mut x);
                let exact = optimal_inputs(&m, &x, &[a, b], GameRole::Reach).unwrap().hdot;
                prop_assert!((hv - exact).abs() < 1e-9);
            }
        }
    }
}
