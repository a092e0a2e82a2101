//! Numerical building blocks: quadrature, uniform-mesh calculus, scalar
//! root finding and maximisation, and the norm-preserving Magnus integrator.

pub mod magnus;
pub mod mesh;
pub mod quad;
pub mod scalar;
