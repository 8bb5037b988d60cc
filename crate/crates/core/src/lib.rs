pub mod orbital;
pub mod transfer;
pub mod lpsolve;
pub mod linmodel;
pub mod bnb;
pub mod planner;
