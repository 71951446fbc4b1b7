"""RCQ LDPC decoder design (HDQ + MIM-DDE) and simulation."""
