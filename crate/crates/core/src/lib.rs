pub mod hp;
pub mod sum;
pub mod regvar;
pub mod thinset;
pub mod fit;
pub mod expsum;
pub mod signal;
pub mod kernels;
pub mod operators;
pub mod czd;
pub mod ergodic;
pub mod suite;
