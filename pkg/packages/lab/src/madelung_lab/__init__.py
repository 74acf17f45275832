# Madelung Lab - Numerical Core
