template <typename T> T id(T v){return v;}
