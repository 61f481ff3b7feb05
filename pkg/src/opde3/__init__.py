"""Third-order operator-differential boundary value problems on the half-line."""
