fn main() {
    // populated once the library surface lands
}
