pub mod elastic_oracle;
