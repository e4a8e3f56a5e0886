pub mod analyze;
pub mod evalcmd;
pub mod gen;
pub mod mixcmd;
pub mod plancmd;
