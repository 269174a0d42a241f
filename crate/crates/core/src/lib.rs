pub mod backends;
pub mod cli;
pub mod cubecomplex;
pub mod instance;
pub mod minimal;
pub mod pocset;
pub mod relations;
pub mod window;
