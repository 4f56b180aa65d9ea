//! The closed-form worst case against exhaustive corner enumeration, the
//! maximizing perturbation, and the subgradient at a point.

use robust_lsq::linalg::{DenseMatrix, DenseVector};
use robust_lsq::problem::ProblemInstance;
use robust_lsq::robust::{corner_maximum, evaluate};

fn main() -> robust_lsq::Result<()> {
    let a = DenseMatrix::from_row_slice(3, 2, &[0.54, -0.20, 0.13, 0.91, -0.66, 0.35]);
    let b = DenseVector::from_vec(vec![0.4, 0.7, -0.1]);
    let d = DenseMatrix::from_row_slice(3, 2, &[0.005, 0.005, 0.01, 0.0, 0.02, 0.005]);
    let problem = ProblemInstance::new(a, b)?;
    let x = DenseVector::from_vec(vec![1.2, -0.8]);

    let closed = evaluate(&problem, &d, &x, true)?;
    let brute = corner_maximum(&problem, &d, &x)?;
    println!("plain residual      {:.12}", problem.residual(&x).norm_squared());
    println!("closed-form f(x)    {:.12}", closed.value);
    println!("corner enumeration  {:.12}", brute.value);
    println!("worst perturbation  {}", closed.worst_delta.unwrap());
    println!("subgradient         {}", closed.subgrad.transpose());
    Ok(())
}
