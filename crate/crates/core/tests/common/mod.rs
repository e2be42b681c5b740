//! Independent reference implementations used by the integration tests.
//! Everything here is plain `Vec` arithmetic so it shares no code with the
//! library's linear algebra.
#![allow(dead_code)]

use mrlstd::envs::{CollectionMode, Dataset, EnvKind, MdpSpec, Sample};
use mrlstd::policy::Policy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![0.0; c]; r]
}

pub fn eye(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(r, c);
    for i in 0..r {
        for t in 0..k {
            let v = a[i][t];
            for j in 0..c {
                out[i][j] += v * b[t][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn mat_vec(a: &Dense, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn add_scaled(a: &mut Dense, b: &Dense, c: f64) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += c * y;
        }
    }
}

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Dense = a.iter().zip(b).map(|(row, &bi)| row.iter().copied().chain([bi]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        assert!(m[col][col].abs() > 1e-300, "singular oracle system");
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub type Point = (Vec<f64>, usize);

pub fn kernel(x: &Point, y: &Point, sigma: f64) -> f64 {
    if x.1 != y.1 {
        return 0.0;
    }
    let d2: f64 = x.0.iter().zip(&y.0).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

pub fn gram(a: &[Point], b: &[Point], sigma: f64) -> Dense {
    a.iter().map(|x| b.iter().map(|y| kernel(x, y, sigma)).collect()).collect()
}

/// `L = D - W` of the epsilon graph, built by the definition.
pub fn laplacian(points: &[Point], eps: f64, same_action_only: bool) -> Dense {
    let m = points.len();
    let mut l = zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i == j || (same_action_only && points[i].1 != points[j].1) {
                continue;
            }
            let d2: f64 = points[i].0.iter().zip(&points[j].0).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2.sqrt() <= eps {
                l[i][j] -= 1.0;
                l[i][i] += 1.0;
            }
        }
    }
    l
}

/// Random continuous dataset with `num_actions` actions; about
/// `terminal_frac` of the transitions are terminal.
pub fn random_dataset(seed: u64, n: usize, num_actions: usize, gamma: f64, terminal_frac: f64) -> Dataset {
    let mut r = rng(seed);
    let spec = MdpSpec { state_dim: 2, num_actions, gamma, max_episode_steps: None };
    let samples = (0..n)
        .map(|_| Sample {
            s: vec![r.random_range(0.0..4.0), r.random_range(0.0..4.0)],
            a: r.random_range(0..num_actions),
            r: r.random_range(-1.0..1.0),
            s_next: vec![r.random_range(0.0..4.0), r.random_range(0.0..4.0)],
            terminal: r.random_bool(terminal_frac),
        })
        .collect();
    Dataset::new(samples, spec, EnvKind::CartPole, CollectionMode::Uniform, seed).unwrap()
}

pub fn points_and_next(d: &Dataset, policy: &dyn Policy) -> (Vec<Point>, Vec<Point>) {
    let x = d.samples().iter().map(|s| (s.s.clone(), s.a)).collect();
    let xn = d.samples().iter().map(|s| (s.s_next.clone(), policy.action(&s.s_next))).collect();
    (x, xn)
}

/// Minimizes the nested kernel-LSTD objective directly over `α`:
///
/// `(1/n)‖Q(X) − h_Q(X)‖² + λ_Q αᵀK_Qα + λ_M/(2n)² Q(X̃)ᵀ L Q(X̃)`
///
/// where `h_Q` is the kernel ridge fit (weight `λ_h`) of the targets
/// `r + γ·(1 − done)·Q(X')`, solved explicitly for every basis direction of α.
#[allow(clippy::too_many_arguments)]
pub fn nested_objective_alpha(
    d: &Dataset,
    policy: &dyn Policy,
    sigma: f64,
    lambda_h: f64,
    lambda_q: f64,
    lambda_m: f64,
    lap: Option<&Dense>,
) -> Vec<f64> {
    let n = d.len();
    let nf = n as f64;
    let gamma = d.spec().gamma;
    let (x, xn) = points_and_next(d, policy);
    let support: Vec<Point> = x.iter().chain(&xn).cloned().collect();
    let m = support.len();
    let kq = gram(&support, &support, sigma);
    let kh = gram(&x, &x, sigma);
    let mut reg = kh.clone();
    for i in 0..n {
        reg[i][i] += lambda_h * nf;
    }
    let inner = |y: &[f64]| mat_vec(&kh, &solve(&reg, y));
    let rewards: Vec<f64> = d.samples().iter().map(|s| s.r).collect();
    let cont: Vec<f64> = d.samples().iter().map(|s| if s.terminal { 0.0 } else { 1.0 }).collect();
    let b = inner(&rewards);
    // residual(α) = A α − b
    let mut a = zeros(n, m);
    for j in 0..m {
        let targets: Vec<f64> = (0..n).map(|i| gamma * cont[i] * kq[n + i][j]).collect();
        let h = inner(&targets);
        for i in 0..n {
            a[i][j] = kq[i][j] - h[i];
        }
    }
    let at = transpose(&a);
    let mut hess = mul(&at, &a);
    hess.iter_mut().flatten().for_each(|v| *v /= nf);
    add_scaled(&mut hess, &kq, lambda_q);
    if let Some(l) = lap {
        let klk = mul(&kq, &mul(l, &kq));
        add_scaled(&mut hess, &klk, lambda_m / (4.0 * nf * nf));
    }
    let g: Vec<f64> = mat_vec(&at, &b).into_iter().map(|v| v / nf).collect();
    solve(&hess, &g)
}

/// Minimizes `(1/n)‖Y − Kα‖² + λ_f αᵀKα + λ_M/n² αᵀKLKα` directly.
pub fn laprls_objective_alpha(x: &[Point], y: &[f64], sigma: f64, l: &Dense, lambda_f: f64, lambda_m: f64) -> Vec<f64> {
    let nf = x.len() as f64;
    let k = gram(x, x, sigma);
    let mut hess = mul(&k, &k);
    hess.iter_mut().flatten().for_each(|v| *v /= nf);
    add_scaled(&mut hess, &k, lambda_f);
    add_scaled(&mut hess, &mul(&k, &mul(l, &k)), lambda_m / (nf * nf));
    let g: Vec<f64> = mat_vec(&k, y).into_iter().map(|v| v / nf).collect();
    solve(&hess, &g)
}

/// Policy iteration on the two-room model from the transition lists alone,
/// returning `Q*` per cell index.
pub fn two_room_q_star(env: &mrlstd::envs::two_room::TwoRoom) -> Vec<[f64; 4]> {
    use mrlstd::envs::two_room::{Cell, NUM_ACTIONS, NUM_CELLS};
    let mut pi = vec![0usize; NUM_CELLS];
    loop {
        // evaluate V^π by solving (I − γP_π)V = r_π
        let mut a = eye(NUM_CELLS);
        let mut b = vec![0.0; NUM_CELLS];
        for c in Cell::all() {
            for (next, p, r) in env.outcomes(c, pi[c.index()]) {
                a[c.index()][next.index()] -= env.gamma * p;
                b[c.index()] += p * r;
            }
        }
        let v = solve(&a, &b);
        let q: Vec<[f64; 4]> = Cell::all()
            .map(|c| {
                let mut row = [0.0; NUM_ACTIONS];
                for (a, slot) in row.iter_mut().enumerate() {
                    *slot = env.outcomes(c, a).iter().map(|&(nx, p, r)| p * (r + env.gamma * v[nx.index()])).sum();
                }
                row
            })
            .collect();
        let mut stable = true;
        for c in Cell::all() {
            let row = q[c.index()];
            let cur = row[pi[c.index()]];
            let (best, bv) = row.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (a, &v)| if v > acc.1 { (a, v) } else { acc });
            if bv > cur + 1e-12 {
                pi[c.index()] = best;
                stable = false;
            }
        }
        if stable {
            return q;
        }
    }
}
