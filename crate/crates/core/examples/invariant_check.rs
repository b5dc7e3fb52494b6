//! The invariant battery behind `ibsim check`.

use ibsim::experiments::check_suite;

fn main() {
    let report = check_suite();
    print!("{report}");
    println!("all passed: {}", report.all_passed());
}
