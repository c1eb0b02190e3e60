pub mod als;
pub mod constructions;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lstsq;
pub mod tensor;
pub mod tr;
pub mod unfolding;
pub mod verify;
