//! Mirror maps, Bregman divergences and the closed-form prox steps.

use accmd::linalg::{DiagonalMatrix, Vector};
use accmd::mirror::{composite_prox, mirror_prox, EntropyMirror, Mirror, MirrorFunction, QuadraticMirror};
use accmd::objective::NonsmoothTerm;

fn main() -> accmd::Result<()> {
    let simplex: MirrorFunction = EntropyMirror::simplex(4).into();
    let x = Vector::from(vec![0.1, 0.2, 0.3, 0.4]);
    let y = Vector::from(vec![0.25; 4]);
    println!("KL(x, y) = {:.6}", simplex.bregman(&x, &y)?);
    println!(
        "dual form = {:.6}",
        simplex.bregman_conjugate(&simplex.grad(&y)?, &simplex.grad(&x)?)?
    );

    // softmax of h / (1 + α)
    let h = Vector::from(vec![1.0, 0.0, -1.0, 2.0]);
    let p = mirror_prox(&simplex, 1.0, &h)?;
    println!("simplex prox: {:?}", p.primal.as_slice());

    // generalized soft thresholding with metric D
    let d = DiagonalMatrix::new(Vector::from(vec![1.0, 2.0, 4.0]));
    let quad: MirrorFunction = QuadraticMirror::diagonal(d)?.into();
    let h = Vector::from(vec![3.0, -0.5, 8.0]);
    let q = composite_prox(&quad, 0.0, 1.0, &h, &NonsmoothTerm::l1(1.0)?)?;
    println!("soft threshold: {:?}", q.primal.as_slice());
    Ok(())
}
