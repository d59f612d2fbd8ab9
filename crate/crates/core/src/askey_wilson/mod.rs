//! Askey-Wilson laws and the Askey-Wilson process.

mod ansatz;
mod measure;
mod process;

pub use ansatz::{
    ansatz_rhs, constant_c1, constant_c2, leading_atom_mass, partition_zn, partition_zn_scaled,
    scaled_product_moment, AnsatzEstimate, AnsatzMethod, QUADRATURE_MAX_LEVELS,
};
pub use measure::{aw_atoms, aw_density, default_integrator, Atom, AwMeasure, AwParams, ATOM_EPS};
pub use process::{
    aw_sample_path, AwPathSampler, AwProcessSpec, AwSampler, AwState, ThetaTable, AC_BOUNDARY_EPS,
    MARGINAL_TABLE_CELLS, TRANSITION_TABLE_CELLS,
};
