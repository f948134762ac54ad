use num_rational::Ratio;

/// Exact fraction used for every aggregated metric.
pub type Rational = Ratio<i128>;

pub(crate) fn ratio(numer: i128, denom: i128) -> Rational {
    Ratio::new(numer, denom)
}

pub(crate) fn from_int(v: i128) -> Rational {
    Ratio::from_integer(v)
}

/// Lossy conversion for display and floating-point comparisons.
pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Unweighted mean of the values; `None` when empty.
pub fn mean<'a, I>(values: I) -> Option<Rational>
where
    I: IntoIterator<Item = &'a Rational>,
{
    let mut sum = from_int(0);
    let mut n = 0i128;
    for v in values {
        sum += *v;
        n += 1;
    }
    (n > 0).then(|| sum / from_int(n))
}
