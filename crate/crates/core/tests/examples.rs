//! Runs every example through its `run_example` entry point.

mod catalog_check {
    include!("../examples/catalog_check.rs");
}

#[test]
fn catalog_check_runs() {
    catalog_check::run_example().unwrap();
}

mod invariant_count {
    include!("../examples/invariant_count.rs");
}

#[test]
fn invariant_count_runs() {
    invariant_count::run_example().unwrap();
}

mod invariant_solution {
    include!("../examples/invariant_solution.rs");
}

#[test]
fn invariant_solution_runs() {
    invariant_solution::run_example().unwrap();
}

mod linear_theory {
    include!("../examples/linear_theory.rs");
}

#[test]
fn linear_theory_runs() {
    linear_theory::run_example().unwrap();
}

mod method_of_steps {
    include!("../examples/method_of_steps.rs");
}

#[test]
fn method_of_steps_runs() {
    method_of_steps::run_example().unwrap();
}

mod parse_and_differentiate {
    include!("../examples/parse_and_differentiate.rs");
}

#[test]
fn parse_and_differentiate_runs() {
    parse_and_differentiate::run_example().unwrap();
}

mod platoon {
    include!("../examples/platoon.rs");
}

#[test]
fn platoon_runs() {
    platoon::run_example().unwrap();
}

mod prolongation_and_brackets {
    include!("../examples/prolongation_and_brackets.rs");
}

#[test]
fn prolongation_and_brackets_runs() {
    prolongation_and_brackets::run_example().unwrap();
}

mod traffic_examples {
    include!("../examples/traffic_examples.rs");
}

#[test]
fn traffic_examples_runs() {
    traffic_examples::run_example().unwrap();
}
