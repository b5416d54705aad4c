use cdvf::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn row(m: &Poly, nsteps: usize, trials: u64, n: i64, cap: i64, seed: u64) -> (f64, f64, f64) {
    let q2 = BaseRing::padic(2).unwrap();
    let (mut sj, mut snd, mut sd) = (0i64, 0i64, 0i64);
    for t in 0..trials {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(t);
        let inputs: Vec<Poly> = (0..nsteps)
            .map(|_| Poly::new(q2, (0..5).map(|_| PadicScalar::random_integral(q2, n, &mut rng)).collect()))
            .collect();
        let (_, gj) = cdvf::prec::modmul_chain_jagged(m, &inputs, n).unwrap();
        let (_, _, rep) = cdvf::lattice::modmul_chain_lattice(m, &inputs, n, cap).unwrap();
        sj += gj; snd += rep.g_nd; sd += rep.g_d;
    }
    let t = trials as f64;
    (sj as f64 / t, snd as f64 / t, sd as f64 / t)
}

fn main() {
    let q2 = BaseRing::padic(2).unwrap();
    let sep = Poly::from_i64(q2, &[1, 0, 0, 0, 0, 1]);
    let (j, nd, d) = row(&sep, 10, 1000, 50, 104, 42);
    println!("X^5+1 n=10 (1000 trials): jagged {j:.2} lattice ({nd:.2}+{d:.2}) paper (0.4, 0.9+6.0)");
    // shift Eisenstein (X+1)^5 + 2 = X^5+5X^4+10X^3+10X^2+5X+3
    let se = Poly::from_i64(q2, &[3, 5, 10, 10, 5, 1]);
    for nsteps in [10usize, 50] {
        let (j, nd, d) = row(&se, nsteps, 300, 50, 64 + 4 * nsteps as i64, 42);
        println!("(X+1)^5+2 n={nsteps} (300 trials): jagged {j:.2} lattice ({nd:.2}+{d:.2})");
    }
}
