//! Error categories and their exit statuses.

use std::fmt;

use ampqkd_core::Error as CoreError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    /// Malformed configuration or a value outside a physical domain.
    Schema,
    Infeasible,
    /// Quadrature, truncation or summation budget failures.
    Numerical,
    Io,
    Runtime,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Schema => 2,
            Category::Infeasible => 3,
            Category::Numerical => 4,
            Category::Io => 5,
            Category::Runtime => 1,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub message: String,
}

impl Failure {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn core_category(e: &CoreError) -> Category {
    match e {
        CoreError::Quadrature { .. } | CoreError::Truncation { .. } | CoreError::BudgetExceeded(_) => {
            Category::Numerical
        }
        CoreError::Io(_) => Category::Io,
        _ => Category::Schema,
    }
}

/// Walks the error chain for the first recognizable cause.
pub fn categorize(err: &anyhow::Error) -> Category {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.category;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return core_category(e);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<csv::Error>().is_some() {
            return Category::Io;
        }
    }
    Category::Runtime
}
