use ndarray::Array2;
use num_complex::Complex64 as C64;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args[1].parse().unwrap();
    let stack_mb: usize = args[2].parse().unwrap();
    let which = args[3].clone();
    let child = std::thread::Builder::new()
        .stack_size(stack_mb * 1024 * 1024)
        .spawn(move || {
            let mut m: Array2<C64> = Array2::eye(n);
            for i in 0..n {
                m[[i, (i + 1) % n]] = C64::new(0.3, 0.1);
            }
            match which.as_str() {
                "lu" => {
                    use ndarray_linalg::Factorize;
                    let _ = m.factorize().unwrap();
                }
                "eig" => {
                    use ndarray_linalg::Eig;
                    let _ = m.eig().unwrap();
                }
                _ => unreachable!(),
            }
        })
        .unwrap();
    child.join().unwrap();
    println!("n={n} stack={stack_mb}MB: OK");
}
