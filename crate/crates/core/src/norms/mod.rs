pub mod angular;
pub mod maximal;
pub mod estimates;
pub mod mixed;
pub mod report;
pub mod weights;
