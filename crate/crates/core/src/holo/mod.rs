//! Analytic functions of matrices.
//!
//! Functions are written in a small expression language over `z` (see
//! [`parse`]). A [`HoloFunction`] knows its poles and branch cuts, which is
//! what [`auto_contour`] needs to build a [`Contour`] around a spectrum.
//! [`calc_contour`], [`calc_triangular`] and [`calc_normal`] then compute
//! `h(T)` in three independent ways.

mod calc;
mod contour;
mod expr;
mod function;
mod series;

pub use calc::{calc_contour, calc_contour_many, calc_normal, calc_triangular, contour_integral};
pub use contour::{auto_contour, auto_contour_with, contour_for, Circle, Contour, DEFAULT_NODES, MIN_NODES};
pub use expr::{parse_expr, Expr, Func};
pub use function::{BranchCut, HoloFunction};
pub use series::taylor;

/// Parses a function source string.
pub fn parse(source: &str) -> crate::Result<HoloFunction> {
    HoloFunction::parse(source)
}
