/// Classic chi-square statistic of the 2×2 contingency table `[[a,b],[c,d]]`:
/// `N(ad−bc)² / ((a+b)(c+d)(a+c)(b+d))`. Returns 0 when any margin is zero,
/// which covers independence and degenerate tables alike.
pub fn chi_square_2x2(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let col2 = b + d;
    if row1 == 0 || row2 == 0 || col1 == 0 || col2 == 0 {
        return 0.0;
    }
    let n = (row1 + row2) as f64;
    let det = a as f64 * d as f64 - b as f64 * c as f64;
    n * det * det / (row1 as f64 * row2 as f64 * col1 as f64 * col2 as f64)
}
