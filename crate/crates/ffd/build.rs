fn main() {
    // Eigensolves go through the system LAPACK/BLAS shared libraries.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=blas");
}
