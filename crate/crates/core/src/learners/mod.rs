//! Base classifiers: weighted CART, SMO-trained SVC, logistic regression and k-NN.

mod cart;
mod knn;
mod logreg;
mod svc;

pub use cart::{cart_fit, entropy, gini, CartConfig, CartTree, Criterion, Node};
pub use knn::{knn_fit, KnnModel, DEFAULT_K};
pub use logreg::{logreg_fit, logreg_objective, sigmoid, LogRegConfig, LogRegModel};
pub use svc::{svc_fit, Kernel, SvcConfig, SvcModel};
