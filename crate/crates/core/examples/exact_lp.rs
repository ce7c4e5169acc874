//! Exact rational linear programming: a small production problem and the
//! dual that certifies its optimum.

use pushoutforge::lp::{lp_maximize, LinearProgram, LpOutcome};
use pushoutforge::ratlin::{format_rational, format_vector, int, rat, vector};

fn main() -> pushoutforge::error::Result<()> {
    // max 3x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  x <= 3,  x, y >= 0
    let primal = LinearProgram::new(vector(&[3, 2]))
        .le(vector(&[1, 1]), int(4))
        .le(vector(&[1, 3]), int(6))
        .le(vector(&[1, 0]), int(3))
        .nonneg(0)
        .nonneg(1);
    let (value, point) = lp_maximize(&primal)?.optimal().expect("bounded and feasible");
    println!("primal optimum {} at {:?}", format_rational(&value), format_vector(&point));

    // min 4a + 6b + 3c  s.t.  a + b + c >= 3,  a + 3b >= 2,  a, b, c >= 0
    let dual = LinearProgram::new(vector(&[-4, -6, -3]))
        .le(vector(&[-1, -1, -1]), int(-3))
        .le(vector(&[-1, -3, 0]), int(-2))
        .nonneg(0)
        .nonneg(1)
        .nonneg(2);
    let (dvalue, multipliers) = lp_maximize(&dual)?.optimal().expect("dual optimum");
    println!("dual optimum {} with multipliers {:?}", format_rational(&-dvalue), format_vector(&multipliers));

    // fractional data stays exact
    let thin = LinearProgram::new(vec![rat(1, 3), rat(1, 7)]).le(vec![rat(2, 9), rat(5, 11)], int(1)).nonneg(0).nonneg(1);
    if let LpOutcome::Optimal { value, point } = lp_maximize(&thin)? {
        println!("thin program: {} at {:?}", format_rational(&value), format_vector(&point));
    }

    let empty = LinearProgram::new(vector(&[1])).le(vector(&[1]), int(-1)).nonneg(0);
    println!("x <= -1 with x >= 0: {:?}", lp_maximize(&empty)?);
    let open = LinearProgram::new(vector(&[1, 1])).le(vector(&[1, -1]), int(0));
    println!("x <= y, maximise x + y: {:?}", lp_maximize(&open)?);
    Ok(())
}
