"""HTTP service wrapping the verification campaigns."""
