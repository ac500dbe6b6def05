"""Single queue approximation: spectral limiting rates, approximated rate profiles and the birth-death solve."""
