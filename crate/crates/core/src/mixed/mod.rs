//! Mixed-initiative responders: the user leads and the agent reacts.

pub mod eliza;
pub mod knowledge;
pub mod ood;
pub mod opinions;
pub mod qa;
pub mod retrieval;
