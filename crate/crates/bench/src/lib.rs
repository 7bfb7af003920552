// Residual benchmark kernels; see benches/residual.rs.
