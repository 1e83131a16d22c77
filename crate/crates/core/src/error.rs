use serde::Serialize;
use serde_json::{json, Value};

use crate::metric::AuditReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error category, used for CLI exit codes and the HTTP error body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorKind {
    Validation,
    Range,
    NotFound,
    Config,
    Format,
    Audit,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation failed for {context}: {detail}")]
    Validation {
        context: String,
        /// 1-based element position, when the failure is tied to one element.
        element: Option<usize>,
        value: Option<u128>,
        detail: String,
    },
    #[error("characteristic value {code} does not fit in {width} digits")]
    Range { code: u128, width: usize },
    #[error("{what} not found: {detail}")]
    NotFound { what: &'static str, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot parse {source_name}: {detail}")]
    Format { source_name: String, detail: String },
    #[error("audit failed: {summary}")]
    Audit {
        summary: String,
        report: Option<AuditReport>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Validation { .. } => ErrorKind::Validation,
            Error::Range { .. } => ErrorKind::Range,
            Error::NotFound { .. } => ErrorKind::NotFound,
            Error::Config(_) => ErrorKind::Config,
            Error::Format { .. } => ErrorKind::Format,
            Error::Audit { .. } => ErrorKind::Audit,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    /// Structured data pinpointing the failure, if any.
    pub fn witness(&self) -> Value {
        match self {
            Error::Validation {
                context,
                element,
                value,
                ..
            } => json!({ "context": context, "element_index": element, "value": value.map(|v| v.to_string()) }),
            Error::Range { code, width } => json!({ "code": code.to_string(), "width": width }),
            Error::Audit {
                report: Some(report),
                ..
            } => json!(report.blocking().collect::<Vec<_>>()),
            _ => Value::Null,
        }
    }

    /// `{"error": {kind, detail, witness}}` as served over HTTP.
    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "detail": self.to_string(), "witness": self.witness() } })
    }

    pub(crate) fn validation(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            element: None,
            value: None,
            detail: detail.into(),
        }
    }

    pub(crate) fn format(source_name: impl Into<String>, detail: impl ToString) -> Self {
        Error::Format {
            source_name: source_name.into(),
            detail: detail.to_string(),
        }
    }

    /// Prefix the context of a validation error, e.g. with a record id.
    pub(crate) fn within(self, outer: &str) -> Self {
        match self {
            Error::Validation {
                context,
                element,
                value,
                detail,
            } => Error::Validation {
                context: format!("{outer}: {context}"),
                element,
                value,
                detail,
            },
            other => other,
        }
    }
}
