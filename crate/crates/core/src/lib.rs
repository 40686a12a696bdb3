pub mod constants;
pub mod constrained;
pub mod elements;
pub mod error;
pub mod kepler;
pub mod lambert;
pub mod mission;
pub mod partials;
pub mod pso;
pub mod rapid;
pub mod shape;
pub mod spline;
pub mod time_solver;
