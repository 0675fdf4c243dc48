pub mod evaluate;
pub mod frontalize;
pub mod gen_template;
pub mod inspect;
pub mod landmark;
pub mod sweep;
pub mod train;
