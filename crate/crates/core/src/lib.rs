pub mod error;
pub mod quadrature;
pub mod spectral;
pub mod specfun;
pub mod wavefunctions;
pub mod transitions;
pub mod validation;
