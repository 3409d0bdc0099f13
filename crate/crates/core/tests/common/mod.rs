//! Shared fixtures for the integration tests: small systems, grids and an
//! independent dynamic-programming reference.
#![allow(dead_code)]

use hybridreach::systems::{Dog1dParams, Dog1dVariant, ModelSpec};
use hybridreach::{Dynamics, GridSpec, HybridSystem, InputBox, Mode, SolveResult, Switch};

pub const TARGET_CENTER: f64 = 9.5;
pub const TARGET_RADIUS: f64 = 0.5;

pub fn line_grid(n: usize) -> GridSpec {
    GridSpec::uniform(vec![0.0], vec![10.0], vec![n]).unwrap()
}

pub fn dog(variant: Dog1dVariant) -> HybridSystem {
    ModelSpec::Dog1d(Dog1dParams { variant, ..Dog1dParams::default() }).build().unwrap()
}

fn speed_mode(name: &str, speed: f64) -> Mode {
    Mode::new(
        name,
        1,
        Dynamics::affine(|_, f| f[0] = 0.0, move |_, b| b[0] = speed, |_, _| {}),
        InputBox::new(vec![0.0], vec![1.0]).unwrap(),
        InputBox::empty(),
    )
}

/// `copies` pairs of (walk at 2 m/s, crawl at 1 m/s) with an identity
/// controlled switch between every ordered pair of distinct modes.
pub fn toy(copies: usize) -> HybridSystem {
    let mut modes = Vec::new();
    for c in 0..copies {
        let tag = if c == 0 { String::new() } else { format!("_{c}") };
        modes.push(speed_mode(&format!("walk{tag}"), 2.0));
        modes.push(speed_mode(&format!("crawl{tag}"), 1.0));
    }
    let count = modes.len();
    let mut switches = Vec::new();
    for i in 0..count {
        for j in 0..count {
            if i != j {
                switches.push(Switch::controlled(format!("{i}->{j}"), i, j));
            }
        }
    }
    HybridSystem::new("toy", 1, modes, switches, |x| (x[0] - TARGET_CENTER).abs() - TARGET_RADIUS).unwrap()
}

/// Leftmost point where the nodal profile crosses from positive to
/// non-positive, by linear interpolation between the bracketing nodes.
pub fn zero_crossing(grid: &GridSpec, values: &[f64]) -> Option<f64> {
    let dx = grid.dx(0);
    (1..values.len()).find(|&i| values[i - 1] > 0.0 && values[i] <= 0.0).map(|i| {
        let (a, b) = (values[i - 1], values[i]);
        grid.coord(0, i - 1) + dx * a / (a - b)
    })
}

pub fn crossing_at_start(result: &SolveResult, mode: usize) -> f64 {
    zero_crossing(result.grid(), result.initial(mode).data()).expect("value changes sign")
}

fn lerp_clamped(xs0: f64, dx: f64, v: &[f64], x: f64) -> f64 {
    let s = ((x - xs0) / dx).clamp(0.0, (v.len() - 1) as f64);
    let i = (s.floor() as usize).min(v.len() - 2);
    let w = s - i as f64;
    (1.0 - w) * v[i] + w * v[i + 1]
}

/// Reference reach values on a 1D grid by exhaustive dynamic programming.
///
/// Each step takes, per mode, the best box-corner input through the
/// semi-Lagrangian lookup `V(x + dt f(x, u))`, clamps by the target, then lets
/// every node choose among staying and its enabled controlled switches, or
/// forces it through the best enabled forced switch outside the invariant.
/// Returns one nodal profile per mode at the end of the horizon.
pub fn reference_reach(sys: &HybridSystem, grid: &GridSpec, dt: f64, steps: usize, infeasible: f64) -> Vec<Vec<f64>> {
    assert_eq!(grid.dim(), 1);
    let (x0, dx, n) = (grid.lo()[0], grid.dx(0), grid.n()[0]);
    let xs: Vec<f64> = (0..n).map(|i| x0 + dx * i as f64).collect();
    let hi = grid.hi()[0];
    let l: Vec<f64> = xs.iter().map(|&x| sys.target(&[x])).collect();
    let modes = sys.mode_count();
    let mut v: Vec<Vec<f64>> = vec![l.clone(); modes];
    let at = |field: &[f64], x: f64| {
        if x < x0 - 1e-12 || x > hi + 1e-12 {
            infeasible
        } else {
            lerp_clamped(x0, dx, field, x)
        }
    };
    for _ in 0..steps {
        let post: Vec<Vec<f64>> = (0..modes)
            .map(|q| {
                let m = sys.mode(q);
                let ubox = m.control_box();
                let mut u = vec![0.0; ubox.dim()];
                (0..n)
                    .map(|i| {
                        let mut best = f64::INFINITY;
                        for c in 0..ubox.corner_count() {
                            ubox.corner(c, &mut u);
                            let f = m.dynamics_at(&[xs[i]], &u, &[]);
                            best = best.min(lerp_clamped(x0, dx, &v[q], xs[i] + dt * f[0]));
                        }
                        best.min(l[i])
                    })
                    .collect()
            })
            .collect();
        for q in 0..modes {
            let m = sys.mode(q);
            for i in 0..n {
                let x = [xs[i]];
                let mut best = f64::INFINITY;
                let inside = m.in_invariant(&x);
                if inside {
                    best = post[q][i].min(l[i]);
                }
                for s in sys.switches().iter().filter(|s| s.from == q && s.enabled(&x)) {
                    let controlled = matches!(s.kind, hybridreach::SwitchKind::Controlled);
                    if controlled == inside {
                        best = best.min(at(&post[s.to], s.reset(&x)[0]));
                    }
                }
                v[q][i] = best;
            }
        }
    }
    v
}
