pub mod barenblatt;
pub mod config;
pub mod discrete_operator;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod levy_measure;
pub mod nonlinearity;
pub mod quadrature;
pub mod resolvent;
