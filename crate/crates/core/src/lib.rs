//! Computational calculus of rational Hodge-Tate crystals over a p-adic
//! local field K = Q_p[u]/(E(u)).
//!
//! The layers build on each other: [`padic`] scalars, [`local_field`]
//! elements and polynomials, [`linalg`] matrices, [`pd`] divided-power
//! series, then the [`crystal`] and [`sen`] calculi.

pub mod crystal;
pub mod error;
pub mod linalg;
pub mod local_field;
pub mod padic;
pub mod pd;
pub mod sen;
pub mod valuation;

pub use crystal::{
    binomial_series, cocycle_check, convergence_oracle, nearly_ht_check, stratify, CocycleResult,
    HtCrystal, NhtEvidence, NhtVerdict, OracleOutcome, StratificationSeries, Verdict,
};
pub use error::{Error, Result};
pub use local_field::{
    field_make, k_inv, k_mul, newton_polygon, residue_reduce, FpPoly, KElement, KPoly, LocalField,
    NewtonPolygon, PrecisionPolicy, Segment,
};
pub use linalg::{charpoly, mat_mul, min_entry_valuation, shift, KMatrix};
pub use pd::{binomial, pd_geom_inv, pd_mul, pd_substitute, PdIndex, PdSeries};
pub use padic::{padic_add, padic_inv, padic_mul, PadicScalar};
pub use sen::{
    binomial_power, multiplicativity_defect, recover_sen, sen_from_crystal, series_exp, series_log,
    tau_cocycle, theta_u_lambda_prime, BivariateSeries, FormalMatrixSeries, SenData, WeightClass,
};
pub use valuation::{Valuation, Q};
