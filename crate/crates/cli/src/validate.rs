//! Fast self-check of the library's core invariants. Each check returns
//! `Ok(detail)` or `Err(detail)`.

use boxpart::asym::{estimate_theorem1, fair_coin_rate, tilted_rate};
use boxpart::exact::{brute_force_coeff, coeff, coeff_vector, ln_big, BoxSpec};
use boxpart::lclt::{sup_error, GeometricFamily};
use boxpart::params::{
    delta, discrete_residuals, jacobian, psi, solve_discrete_tilt, solve_tilt, AspectFill,
};
use boxpart::sampler::sample_boxed_batch;
use boxpart::shape::petrov_endpoints;
use num_bigint::BigUint;

use crate::report::Report;

type Check = std::result::Result<String, String>;

fn lib<T>(r: boxpart::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn grid() -> Vec<(f64, f64)> {
    (0..10)
        .flat_map(|i| {
            let a = 0.5 + 2.5 * i as f64 / 9.0;
            (1..=10).map(move |k| (a, 0.5 * a * k as f64 / 10.0))
        })
        .collect()
}

fn coefficient_structure() -> Check {
    for m in 1..=15u64 {
        for l in 1..=15u64 {
            let v = lib(coeff_vector(m, l))?;
            let binom = (0..m).fold(BigUint::from(1u32), |acc, i| acc * (m + l - i) / (i + 1));
            if !v.is_symmetric() || !v.is_unimodal() || v.total() != binom {
                return Err(format!("fails at m = {m}, l = {l}"));
            }
        }
    }
    Ok("symmetric, unimodal, binomial total for m, l <= 15".into())
}

fn brute_force() -> Check {
    for m in 1..=5u64 {
        for l in 1..=5u64 {
            for n in 0..=m * l {
                let spec = lib(BoxSpec::new(m, l, n))?;
                if lib(coeff(spec))? != lib(brute_force_coeff(spec))? {
                    return Err(format!("mismatch at ({m}, {l}, {n})"));
                }
            }
        }
    }
    Ok("matches enumeration for m, l <= 5".into())
}

fn solver_roundtrip() -> Check {
    let mut worst = 0.0_f64;
    for (a, b) in grid() {
        let t = lib(solve_tilt(&lib(AspectFill::new(a, b))?))?;
        let back = lib(psi(t))?;
        worst = worst.max((back.a - a).abs()).max((back.b - b).abs());
        if lib(jacobian(t))?.eigenvalues().1 >= 0.0 {
            return Err(format!("Jacobian not negative definite at ({a}, {b})"));
        }
    }
    if worst < 1e-10 {
        Ok(format!("max residual {worst:.2e} on 100 grid points"))
    } else {
        Err(format!("max residual {worst:.2e}"))
    }
}

fn central_values() -> Check {
    let t = lib(solve_tilt(&lib(AspectFill::new(1.0, 0.5))?))?;
    let dl = lib(delta(t))?;
    let err = (t.c - std::f64::consts::LN_2)
        .abs()
        .max(t.d.abs())
        .max((dl - 1.0 / 3.0).abs());
    if err < 1e-12 {
        Ok("(c, d, delta) = (log 2, 0, 1/3) at A = 1, B = 1/2".into())
    } else {
        Err(format!("c = {}, d = {}, delta = {dl}", t.c, t.d))
    }
}

fn arc_endpoints() -> Check {
    let mut worst = 0.0_f64;
    for (a, b) in grid() {
        let regime = lib(AspectFill::new(a, b))?;
        let t = lib(solve_tilt(&regime))?;
        if t.d <= 0.05 {
            continue;
        }
        let e = lib(petrov_endpoints(&regime))?;
        worst = worst.max((e.s1 - t.c).abs()).max((e.s2 - t.c - t.d).abs());
    }
    if worst < 1e-8 {
        Ok(format!("endpoints equal (c, c+d) to {worst:.1e}"))
    } else {
        Err(format!("deviation {worst:.2e}"))
    }
}

fn estimate_accuracy() -> Check {
    let (m, n) = (48u64, 768u64);
    let exact = ln_big(&lib(coeff(lib(BoxSpec::new(m, m, n))?))?);
    let est = lib(estimate_theorem1(m, m, n))?.log_value;
    let mirror = lib(estimate_theorem1(m, m, m * m - n))?.log_value;
    let ratio = (exact - est).exp();
    if (ratio - 1.0).abs() < 0.02 && (est - mirror).abs() < 1e-9 {
        Ok(format!("exact/estimate = {ratio:.5} at (48, 48, 768)"))
    } else {
        Err(format!(
            "ratio {ratio}, reflection gap {:.2e}",
            (est - mirror).abs()
        ))
    }
}

fn discrete_tilt() -> Check {
    for (m, l, n) in [(10u64, 10u64, 30u64), (40, 20, 200), (100, 100, 3333)] {
        let t = lib(solve_discrete_tilt(m, l, n))?;
        let (rs, rt) = discrete_residuals(m, l, n, t.c, t.d);
        if rs.abs() > 1e-8 * l as f64 || rt.abs() > 1e-8 * n as f64 {
            return Err(format!("residuals ({rs:.2e}, {rt:.2e}) at ({m}, {l}, {n})"));
        }
    }
    Ok("mean equations hold at three boxes".into())
}

fn lclt_decay() -> Check {
    let errs: Vec<f64> = [10usize, 20]
        .iter()
        .map(|&m| sup_error(&GeometricFamily::fair(m)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if errs[1] < errs[0] {
        Ok(format!(
            "fair sup error {:.4} -> {:.4} from m = 10 to 20",
            errs[0], errs[1]
        ))
    } else {
        Err(format!("sup errors {errs:?}"))
    }
}

fn sampler_uniformity() -> Check {
    let count = 30_000usize;
    let samples = lib(sample_boxed_batch(3, 3, 4, count, 1, 1_000_000))?;
    let mut counts = std::collections::BTreeMap::<Vec<u64>, usize>::new();
    for s in &samples {
        if !s.partition.is_valid() || s.partition.size() != 4 {
            return Err("invalid partition".into());
        }
        *counts.entry(s.partition.parts.clone()).or_default() += 1;
    }
    let e = count as f64 / 3.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
    if counts.len() == 3 && chi2 < 13.8155 {
        Ok(format!(
            "chi2 = {chi2:.3} over the 3 partitions of 4 in a 3x3 box"
        ))
    } else {
        Err(format!("{} shapes, chi2 = {chi2:.3}", counts.len()))
    }
}

fn rate_ordering() -> Check {
    let top = fair_coin_rate(1.0);
    for k in 1..10 {
        let b = 0.05 * k as f64;
        if lib(tilted_rate(1.0, b))? >= top {
            return Err(format!("tilted rate not below fair rate at B = {b}"));
        }
    }
    Ok("fair-coin rate exceeds tilted rate for B < A/2".into())
}

/// Runs every check; the flag is true when all pass.
pub fn run() -> (Report, bool) {
    type Named = (&'static str, fn() -> Check);
    let checks: [Named; 10] = [
        ("coefficient_structure", coefficient_structure),
        ("brute_force", brute_force),
        ("solver_roundtrip", solver_roundtrip),
        ("central_values", central_values),
        ("arc_endpoints", arc_endpoints),
        ("estimate_accuracy", estimate_accuracy),
        ("discrete_tilt", discrete_tilt),
        ("lclt_decay", lclt_decay),
        ("sampler_uniformity", sampler_uniformity),
        ("rate_ordering", rate_ordering),
    ];
    let mut r = Report::new(&["invariant", "status", "detail"]);
    let mut failed = 0usize;
    for (name, check) in checks {
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        r.row(vec![name.into(), status.into(), detail.into()]);
    }
    r.diagnostic("failed", failed)
        .diagnostic("total", checks.len());
    (r, failed == 0)
}
