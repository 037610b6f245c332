//! A tree transformation engine for a small XSLT-style language.

use std::sync::Arc;

pub mod codegen;
pub mod dag;
pub mod engine;
pub mod fuzz;
pub mod lexer;
pub mod syntax;
pub mod tree;
pub mod xexpr;

/// Rule, mode, and variable names.
pub type Name = Arc<str>;
