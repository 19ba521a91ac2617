//! Home of the `acceptance` test target. It runs after the other workspace
//! tests, so a failing criterion does not hide their results.
