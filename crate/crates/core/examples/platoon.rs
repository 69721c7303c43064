// Simulate three followers behind a constant-speed leader.

use std::error::Error;

use delaysym::traffic::Scenario;

const SCENARIO: &str = "
leader = t
alpha = 1
n1 = 1
n2 = 1
tau = 0.5
cars = 3
history.1 = t - 1
history.2 = t - 2 + 0.2*sin(t)
history.3 = t - 3
t_end = 5
h = 0.005
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sc: Scenario = SCENARIO.parse()?;
    let st = sc.run()?;
    for (i, car) in st.cars.iter().enumerate() {
        let n = car.last();
        println!("car {}: x({:.1}) = {:.9}, speed {:.9}", i + 1, n.x, n.y, n.dy);
    }
    println!("min headway {:.6}", st.min_headway()?);
    match st.collision {
        Some(c) => println!("collision of car {} at t = {:.4}", c.car, c.t),
        None => println!("no collision"),
    }
    let csv = st.to_csv();
    println!("csv header: {}", csv.lines().next().unwrap_or(""));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
