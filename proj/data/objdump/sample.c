#include <stdio.h>
#include <string.h>
#include <stdlib.h>
#include <ctype.h>
struct kv { char key[32]; int val; struct kv* next; };
static struct kv* table[64];
static unsigned hash(const char* s){ unsigned h=5381; while(*s) h = h*33 ^ (unsigned char)*s++; return h & 63; }
int put(const char* k, int v){ unsigned h=hash(k); for(struct kv* e=table[h]; e; e=e->next) if(strcmp(e->key,k)==0){ e->val=v; return 0; }
  struct kv* e=malloc(sizeof *e); if(!e) return -1; strncpy(e->key,k,31); e->key[31]=0; e->val=v; e->next=table[h]; table[h]=e; return 1; }
int get(const char* k, int* out){ for(struct kv* e=table[hash(k)]; e; e=e->next) if(!strcmp(e->key,k)){ *out=e->val; return 1;} return 0; }
static int cmpint(const void* a, const void* b){ int x=*(const int*)a, y=*(const int*)b; return (x>y)-(x<y); }
int median(int* v, int n){ if(n<=0) return 0; qsort(v,n,sizeof *v,cmpint); return (n%2)? v[n/2] : (v[n/2-1]+v[n/2])/2; }
int parse_line(const char* s, int* a, int* b){ int n=0; while(*s && isspace((unsigned char)*s)) s++; if(*s=='#') return 0;
  n = sscanf(s, "%d %d", a, b); if(n!=2) return -1; if(*a < 0 || *b < 0) return -2; if(*a > *b){ int t=*a; *a=*b; *b=t; } return 1; }
long checksum(const unsigned char* p, size_t n){ long s=0; for(size_t i=0;i<n;i++){ if(p[i]>=128) s-=p[i]; else if(p[i]<32) s+=2*p[i]; else s+=p[i]; } return s; }
int clampi(int x, int lo, int hi){ return x<lo? lo : x>hi ? hi : x; }
unsigned ucmp(unsigned a, unsigned b){ if(a<b) return 1; if(a>b) return 2; if(a==b) return 3; return 0; }
int main(int argc, char** argv){
  int vals[128]; int n=0; char line[256];
  FILE* f = argc>1 ? fopen(argv[1],"r") : stdin; if(!f){ perror("open"); return 2; }
  while(fgets(line,sizeof line,f) && n<128){ int a,b; int r=parse_line(line,&a,&b); if(r<0){ fprintf(stderr,"bad line\n"); continue; } if(r==0) continue;
    vals[n++] = clampi(b-a, 0, 1000); char key[32]; snprintf(key,sizeof key,"%d",a); put(key,b); }
  if(f!=stdin) fclose(f);
  int out=0; if(get("1",&out)) printf("1 -> %d\n", out);
  printf("median %d checksum %ld ucmp %u\n", median(vals,n), checksum((unsigned char*)line, strlen(line)), ucmp(n, (unsigned)argc));
  return n==0;
}
