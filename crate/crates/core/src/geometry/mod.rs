//! Numerical realisation of the normally hyperbolic cylinder and its
//! invariant manifolds: rates, footpoints of the wave maps, stable and
//! unstable graphs, homoclinic roots and the brute-force scattering map.

mod chart;
mod footpoint;
mod graphs;
mod rates;
mod scattering;

pub use chart::{chart_jacobian_det, chart_to_pq, pq_to_chart};
pub use footpoint::{
    footpoint_horizon, footpoint_minus, footpoint_plus, FootpointConfig, FootpointResult,
};
pub use graphs::{find_homoclinic_x, stable_graph_y, unstable_graph_y, GraphValue, HomoclinicRoot};
pub use rates::{rates, RateBundle};
pub use scattering::{scattering_map_numeric, ScatteringSample};

use serde::{Deserialize, Serialize};

use crate::flow::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub integrator: IntegratorConfig,
    /// Initial bisection window `|y| <= window_factor * |eps|`.
    pub window_factor: f64,
    /// Largest admissible half-window for the energy bisection; the chart
    /// needs `y` above the potential minimum.
    pub window_max: f64,
    pub bisection_tol: f64,
    /// Tolerance on `|y^u - y^s|` at a homoclinic root.
    pub root_tol: f64,
    /// Smallest admissible `|d(y^u - y^s)/dx|` at a root.
    pub degeneracy_threshold: f64,
    /// Distance past the saddle (in `q`, and in `s p / lambda`) that decides
    /// on which side of the manifold an orbit escapes.
    pub escape_threshold: f64,
    /// Longest flow used to classify a shooting orbit.
    pub max_time: f64,
    pub max_root_iterations: usize,
    /// Tolerance of the outer iteration of the scattering map.
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    pub footpoint: FootpointConfig,
    /// Centre rate `mu_c`, reported only.
    pub mu_c: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            window_factor: 50.0,
            window_max: 0.04,
            bisection_tol: 1e-12,
            root_tol: 1e-11,
            degeneracy_threshold: 1e-6,
            escape_threshold: 0.05,
            max_time: 60.0,
            max_root_iterations: 40,
            newton_tol: 1e-9,
            max_newton_iterations: 30,
            footpoint: FootpointConfig::default(),
            mu_c: 1e-3,
        }
    }
}
