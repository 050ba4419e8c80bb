//! Expression language and metric file format.

mod expr;
mod metric;
mod metric_file;
mod parser;

pub use expr::{BinOp, Env, Expr};
pub use metric::{MetricSource, MetricSpec};
pub use metric_file::{parse_metric_file, MetricFile};
pub use parser::parse_expr;
