use alphamink::alphafun::*;
use alphamink::extgrid::Grid;

fn main() {
    // closed form: δJ(f,f) = 2J − ∫φ f^{1−α} = 2π/0.6 − π·10/3 = 10.47197...
    for count in [41usize, 81] {
        let g = Grid::rect((-12.0, 12.0, count), (-12.0, 12.0, count)).unwrap();
        let f = AlphaConcaveFunction::from_base_fn(-0.4, g.clone(), |p| 0.5*(p[0]*p[0]+p[1]*p[1])).unwrap();
        let j = total_mass(&f).unwrap().value;
        let sv = self_variation_formula(&f).unwrap();
        let vf = first_variation_formula(&f, &f).unwrap();
        let nv = first_variation_numeric(&f, &f, &[0.2, 0.1, 0.05], CombineOpts::default()).unwrap();
        println!("count={count}: J={j:.5} (exact 10.47198) self={sv:.5} formula={:.5} numeric={:.5} quotients={:?}",
                 vf.value(), nv.extrapolated, nv.quotients);
    }
}
