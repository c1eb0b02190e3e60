//! A quick self-check over the library's core invariants, run by the
//! `verify` subcommand. Each check reports a pass flag and a short detail.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::als::{als_loop, objective, AlsConfig, DESCENT_SLACK};
use crate::constructions::{build_witness_u, build_witness_w, SpuriousInstance};
use crate::error::Result;
use crate::experiments::perturb;
use crate::io::{read_tensor, read_tr, write_tensor, write_tr};
use crate::tensor::fnorm;
use crate::tr::{gauge_transform, random_cores, random_w_cores, tau, GaugeTuple};
use crate::unfolding::{check_full_column_rank, mode_alpha, reshape_tj, DEFAULT_RANK_TOL};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult {
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

const GRID: [(usize, usize, usize); 4] = [(3, 2, 5), (3, 3, 10), (4, 2, 5), (4, 3, 10)];

/// Runs every check with RNG streams derived from `seed`.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        check("spurious objective is one half", || {
            let mut worst = 0.0f64;
            for (d, r, n) in GRID {
                let inst = SpuriousInstance::new(d, r, n)?;
                worst = worst.max((objective(&inst.target, &inst.local_min)? - 0.5).abs());
            }
            Ok((worst <= 1e-15, format!("max |f - 1/2| = {worst:e}")))
        }),
        check("tau(u0) equals T0 minus the corner", || {
            for (d, r, n) in GRID {
                let inst = SpuriousInstance::new(d, r, n)?;
                if tau(&inst.local_min) != inst.target.sub(&inst.corner())? {
                    return Ok((false, format!("mismatch at d={d} r={r} n={n}")));
                }
            }
            Ok((true, format!("{} instances exact", GRID.len())))
        }),
        check("local minimum under small perturbations", || {
            let inst = SpuriousInstance::new(3, 2, 5)?;
            let mut min_f = f64::INFINITY;
            for t in 0..500u64 {
                let v = perturb(&inst.local_min, 1e-3, seed ^ (t << 20))?;
                min_f = min_f.min(objective(&inst.target, &v)?);
            }
            Ok((
                min_f >= 0.5 - 1e-12,
                format!("min over 500 samples = {min_f:.17}"),
            ))
        }),
        check("witness w reshapes to the identity", || {
            for (d, r) in [(3, 2), (4, 2)] {
                let t = tau(&build_witness_w(d, r, r * r)?);
                for j in 1..d {
                    let m = reshape_tj(&t, j, r)?;
                    if m != Mat::<f64>::identity(m.nrows(), m.ncols()) {
                        return Ok((false, format!("d={d} j={j} not the identity")));
                    }
                }
            }
            Ok((true, "d=3,4 r=2 all j".into()))
        }),
        check("witness u gives full-rank unfoldings", || {
            let w = random_w_cores(2, &[4, 4, 4], seed)?;
            let u = build_witness_u(&tau(&w), 3, 2)?;
            let mut smin = f64::INFINITY;
            for j in 1..=3 {
                let (ok, s) =
                    check_full_column_rank(mode_alpha(&u, j)?.as_ref(), DEFAULT_RANK_TOL)?;
                if !ok {
                    return Ok((false, format!("A_{j} rank deficient (sigma_min {s:e})")));
                }
                smin = smin.min(s);
            }
            Ok((true, format!("min sigma_min = {smin:e}")))
        }),
        check("gauge invariance of tau", || {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for t in 0..10u64 {
                let u = random_cores(3, &[3, 4, 2], seed.wrapping_add(t))?;
                let mats = (0..3)
                    .map(|_| {
                        Mat::from_fn(3, 3, |i, j| {
                            f64::from(u8::from(i == j)) + 0.2 * rng.random_range(-1.0..1.0)
                        })
                    })
                    .collect();
                let v = gauge_transform(&u, &GaugeTuple::new(mats)?)?;
                let tu = tau(&u);
                let rel = fnorm(&tau(&v).sub(&tu)?) / fnorm(&tu).max(1.0);
                worst = worst.max(rel);
            }
            Ok((worst <= 1e-9, format!("max relative change = {worst:e}")))
        }),
        check("ALS objective never increases", || {
            let cfg = AlsConfig {
                max_loops: 20,
                ..AlsConfig::default()
            };
            let mut violations = 0;
            for t in 0..10u64 {
                let target = tau(&random_cores(3, &[3, 3, 3], seed.wrapping_add(100 + t))?);
                let u0 = random_cores(2, &[3, 3, 3], seed.wrapping_add(200 + t))?;
                violations += als_loop(&target, &u0, &cfg)?.descent_violations(DESCENT_SLACK);
            }
            Ok((
                violations == 0,
                format!("{violations} violations in 10 runs"),
            ))
        }),
        check("text formats round-trip", || {
            let inst = SpuriousInstance::new(3, 2, 5)?;
            let mut buf = Vec::new();
            write_tensor(&mut buf, &inst.target)?;
            let t_ok = read_tensor(buf.as_slice())? == inst.target;
            let u = random_cores(2, &[2, 3, 4], seed)?;
            let mut buf = Vec::new();
            write_tr(&mut buf, &u)?;
            let u_ok = read_tr(buf.as_slice())? == u;
            Ok((t_ok && u_ok, "tensor and ring files".into()))
        }),
    ]
}
