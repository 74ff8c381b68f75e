//! Constitutive laws: the monotone flux `a(y, xi)` and the elasticity and
//! electrostriction tensors `B(y)`, `C(y)`.

mod audit;
mod elastic;
mod microstructure;
mod operator;

pub use audit::{
    audit_elastic_tensor, check_growth_conditions, continuity_ratio, monotonicity_ratio,
    ElasticAudit, GrowthReport,
};
pub(crate) use audit::sample_xi;
pub use elastic::{
    apply, eval_elastic_tensor, frobenius, idx4, outer, unit_strain, ElasticTensorField, Lame,
    Mat4, Tensor4,
};
pub use microstructure::{wrap_to_cell, Microstructure, Phase};
pub use operator::{
    eval_operator, Family, Mat2, OperatorSpec, PhaseLaw, StructureConstants, Vec2, DEFAULT_DELTA,
};
