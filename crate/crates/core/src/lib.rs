pub mod agents;
pub mod coordinator;
pub mod gateway;
pub mod golden;
pub mod protocol;
pub mod provider;
pub mod pyfmt;
pub mod registry;
pub mod stack;
pub mod state;
