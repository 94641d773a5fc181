//! Falsification harness: order-of-accuracy fits, the logarithmic-horizon
//! Gronwall experiment, the unperturbed identity suite and the fast
//! cross-module checks behind `selftest`. Every check produces a
//! [`CheckRecord`] with stable keys.

mod fit;
mod gronwall;
mod identities;
mod report;

pub use fit::{order_fit, OrderFit};
pub use gronwall::{gronwall_experiment, GronwallConfig, GronwallReport};
pub use identities::{
    difference_identity_residual, identity_suite, integrator_order, lie_derivative, SuiteConfig,
    SuiteTolerances,
};
pub use report::{CheckRecord, Report, REPORT_SCHEMA, REPORT_SCHEMA_VERSION};

use serde_json::json;

use crate::exprs::parse;
use crate::flow::{Separatrix, SeparatrixMode};
use crate::hamgen::{hamiltonian_of, script_l, GeneratingConfig};
use crate::melnikov::{melnikov, HomoclinicData, QuadConfig};
use crate::model::{hamiltonian_to_field, Sign};
use crate::{Result, SystemSpec};

/// Hamiltonian perturbation used by the self-test: its Melnikov potential has
/// nondegenerate critical points with a nonzero action change.
pub const TEST_HAMILTONIAN: &str = "cos(2*pi*q) * (cos(2*pi*theta) + 0.5*cos(2*pi*0.25*t))";

fn triangle(points: &[(f64, f64, f64)]) -> Result<CheckRecord> {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let field = hamiltonian_to_field(&spec, &parse(TEST_HAMILTONIAN, spec.layout())?)?;
    let h1 = hamiltonian_of(&field)?;
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto)?;
    let cfg = GeneratingConfig::default();
    let quad = QuadConfig::with_tol(1e-12);
    let mut worst: f64 = 0.0;
    for &(i0, th0, t0) in points {
        let g = script_l(&spec, &sep, h1, &[i0], &[th0], t0, None, &cfg)?;
        let h = HomoclinicData::new(&g.tau_star.tau, &[i0], &[th0], t0);
        let m = melnikov(&spec, &sep, &field, &h, &quad)?;
        worst = worst
            .max((m.delta_action[0] - g.d_angle[0]).abs())
            .max((m.delta_angle[0] + g.d_action[0]).abs());
    }
    Ok(CheckRecord::at_most(
        "hamiltonian_triangle",
        json!({ "hamiltonian": TEST_HAMILTONIAN, "points": points }),
        worst,
        1e-7,
    ))
}

fn difference_identity() -> Result<CheckRecord> {
    let spec = SystemSpec::standard(1, 1, Sign::Plus);
    let sep = Separatrix::new(&spec, SeparatrixMode::Auto)?;
    let quad = QuadConfig::default();
    let observables = ["I", "p^2/2 + (cos(2*pi*q) - 1)/(4*pi^2)", "cos(2*pi*q)"];
    let mut worst: f64 = 0.0;
    for src in observables {
        let f = parse(src, spec.layout())?.compile(spec.layout());
        worst = worst.max(difference_identity_residual(
            &spec,
            &sep,
            &f,
            &[0.4],
            &[0.3],
            &[0.1],
            0.2,
            &quad,
        )?);
    }
    Ok(CheckRecord::at_most(
        "difference_identity",
        json!({ "observables": observables, "tau": 0.4 }),
        worst,
        10.0 * quad.tol,
    ))
}

/// Identity suite on `spec` plus the fast cross-module checks on the
/// standard one-pendulum system.
pub fn selftest(spec: &SystemSpec, cfg: &SuiteConfig) -> Report {
    let mut report = identity_suite(spec, cfg);
    let points = [(0.3, 0.1, 0.2), (0.42, 0.6, -0.5), (0.25, 0.85, 1.1)];
    report.push(
        triangle(&points).unwrap_or_else(|e| {
            CheckRecord::failed("hamiltonian_triangle", json!({}), e.to_string())
        }),
    );
    report.push(
        difference_identity().unwrap_or_else(|e| {
            CheckRecord::failed("difference_identity", json!({}), e.to_string())
        }),
    );
    report
}
