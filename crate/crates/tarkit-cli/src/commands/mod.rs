pub mod evaluate;
pub mod extract;
pub mod oracle;
pub mod score;
pub mod stability;

/// Exit status: 0 only when every record scored and every requested metric
/// computed; record-level failures surface in the report's error section
/// and flip the code to 1.
pub fn exit_code(record_errors: usize) -> i32 {
    if record_errors == 0 {
        0
    } else {
        1
    }
}
