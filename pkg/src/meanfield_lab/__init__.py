"""Mean-field particle dynamics, exact W1 transport and BBGKY marginal estimation."""
