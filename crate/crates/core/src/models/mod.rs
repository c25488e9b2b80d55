pub mod arq;
pub mod atm;
