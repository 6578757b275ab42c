# Tests for the ising_neigh package
