//! Network-flow models and solvers.
//!
//! * `steady` and `timevarying`: the MP's routing problems, as LPs solved by
//!   the in-crate simplex in `lp`, with residual checkers for candidate flows.
//! * `social`: the travel-time social optimum, its KKT certificate and
//!   marginal-cost tolls.
//! * `project`: infrastructure projects and project selection.

pub mod lp;
pub mod project;
mod residual;
pub mod social;
pub mod steady;
pub mod timevarying;

pub use lp::{
    check_farkas, check_lp_certificate, FarkasCertificate, LinearProgram, LpOutcome, Relation,
};
pub use project::{
    parse_edit, solve_sop, verify_sop, MaObjective, Project, ProjectEdit, RouteCertificate,
    SopOutcome,
};
pub use residual::{FamilyResidual, ResidualReport};
pub use social::{
    check_kkt, compute_tolls, kkt_certificate, potentials_for, solve_social_optimum_tt,
    total_travel_time, KktCertificate, KktReport, SocialOptimum,
};
pub use steady::{check_steady_feasibility, solve_mp_routing, SteadyFlow, SteadySolution};
pub use timevarying::{
    check_timevarying_feasibility, solve_timevarying_routing, TimeVaryingFlow, TimeVaryingSolution,
};

use thiserror::Error;

use crate::netmodel::NetError;

/// Linear MP objective: fare per served trip minus operating cost per unit
/// of distance driven.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpObjective {
    pub fare: f64,
    pub cost_per_length: f64,
}

impl Default for MpObjective {
    fn default() -> Self {
        Self {
            fare: 10.0,
            cost_per_length: 1.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("flow, demand and network dimensions disagree")]
    Dimension,
    #[error("demand cannot be served: routing constraints are infeasible")]
    Infeasible(FarkasCertificate),
    #[error("routing objective is unbounded")]
    Unbounded,
    #[error("no path from {0} to {1}")]
    Unreachable(usize, usize),
    #[error("delay function of edge {0} is not convex and increasing")]
    NonConvex(usize),
    #[error("edge {0} does not exist")]
    UnknownEdge(usize),
    #[error("no projects to choose from")]
    NoProjects,
    #[error("every project's routing problem is infeasible")]
    NoFeasibleProject,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Net(#[from] NetError),
}
