//! Exit codes and HTTP statuses for each error class.
//!
//! | class            | exit | HTTP | reason             |
//! |------------------|------|------|--------------------|
//! | usage (clap)     | 2    |      |                    |
//! | io               | 3    | 500  | `io`               |
//! | parse            | 4    | 400  | `parse`            |
//! | validation       | 5    | 400  | `invalid_request`  |
//! | config           | 6    | 500  | `config`           |
//! | format           | 7    | 500  | `format`           |
//! | training         | 8    | 500  | `training`         |
//! | degenerate query | 9    | 422  | `degenerate_query` |
//! | unembeddable     | 10   | 422  | `unembeddable`     |
//! | not found        | 11   | 404  | `not_found`        |
//! | undefined        | 12   | 422  | `undefined`        |
//! | protocol         | 13   | 409  | `protocol`         |

use websem_core::ErrorClass;

pub const EXIT_USAGE: u8 = 2;

pub fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Io => 3,
        ErrorClass::Parse => 4,
        ErrorClass::Validation => 5,
        ErrorClass::Config => 6,
        ErrorClass::Format => 7,
        ErrorClass::Training => 8,
        ErrorClass::DegenerateQuery => 9,
        ErrorClass::Unembeddable => 10,
        ErrorClass::NotFound => 11,
        ErrorClass::Undefined => 12,
        ErrorClass::Protocol => 13,
    }
}

pub fn http_status(class: ErrorClass) -> u16 {
    match class {
        ErrorClass::Parse | ErrorClass::Validation => 400,
        ErrorClass::NotFound => 404,
        ErrorClass::Protocol => 409,
        ErrorClass::DegenerateQuery | ErrorClass::Unembeddable | ErrorClass::Undefined => 422,
        ErrorClass::Io | ErrorClass::Config | ErrorClass::Format | ErrorClass::Training => 500,
    }
}

pub fn reason(class: ErrorClass) -> &'static str {
    match class {
        ErrorClass::Io => "io",
        ErrorClass::Parse => "parse",
        ErrorClass::Validation => "invalid_request",
        ErrorClass::Config => "config",
        ErrorClass::Format => "format",
        ErrorClass::Training => "training",
        ErrorClass::DegenerateQuery => "degenerate_query",
        ErrorClass::Unembeddable => "unembeddable",
        ErrorClass::NotFound => "not_found",
        ErrorClass::Undefined => "undefined",
        ErrorClass::Protocol => "protocol",
    }
}
